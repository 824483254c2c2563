"""Shared-task scorer: confusion matrix, macro/SUBJ precision-recall-F1, accuracy."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Sequence

from subjpipe._io import atomic_write_text
from subjpipe.corpus import SubjLabel, load_tsv, read_predictions

METRIC_NAMES = ("f1_macro", "p_macro", "r_macro", "f1_subj", "p_subj", "r_subj", "accuracy")
METRICS_HEADER = "\t".join(METRIC_NAMES)


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 tally with SUBJ as the positive class."""

    tp_subj: int
    fp_subj: int
    fn_subj: int
    tn_subj: int

    def __post_init__(self):
        if min(self.tp_subj, self.fp_subj, self.fn_subj, self.tn_subj) < 0:
            raise MetricsError("negative confusion count")

    @property
    def total(self) -> int:
        return self.tp_subj + self.fp_subj + self.fn_subj + self.tn_subj


@dataclass(frozen=True)
class MetricsReport:
    f1_macro: float
    p_macro: float
    r_macro: float
    f1_subj: float
    p_subj: float
    r_subj: float
    accuracy: float

    def as_row(self) -> str:
        return "\t".join(f"{v:.4f}" for v in astuple(self))


def confusion(gold: Sequence[SubjLabel], pred: Sequence[SubjLabel]) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise MetricsError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    if not gold:
        raise MetricsError("empty label lists")
    tp = fp = fn = tn = 0
    for g, p in zip(gold, pred):
        g_subj = SubjLabel(g) is SubjLabel.SUBJ
        p_subj = SubjLabel(p) is SubjLabel.SUBJ
        if g_subj and p_subj:
            tp += 1
        elif p_subj:
            fp += 1
        elif g_subj:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    # zero-denominator convention: 0 rather than undefined
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def report(cm: ConfusionMatrix) -> MetricsReport:
    if cm.total < 1:
        raise MetricsError("empty confusion matrix")
    p_s, r_s, f_s = _prf(cm.tp_subj, cm.fp_subj, cm.fn_subj)
    # OBJ as positive: its tp is tn_subj, fp is fn_subj, fn is fp_subj
    p_o, r_o, f_o = _prf(cm.tn_subj, cm.fn_subj, cm.fp_subj)
    return MetricsReport(
        f1_macro=(f_s + f_o) / 2,
        p_macro=(p_s + p_o) / 2,
        r_macro=(r_s + r_o) / 2,
        f1_subj=f_s,
        p_subj=p_s,
        r_subj=r_s,
        accuracy=(cm.tp_subj + cm.tn_subj) / cm.total,
    )


def _id_error(kind: str, ids: list[str]) -> str:
    shown = ", ".join(ids[:10])
    more = f" (+{len(ids) - 10} more)" if len(ids) > 10 else ""
    return f"{kind} prediction ids: {shown}{more}"


def evaluate_pairs(gold: Sequence[tuple[str, SubjLabel]],
                   pred: Sequence[tuple[str, SubjLabel]]) -> MetricsReport:
    """Join gold and predicted labels by sentence id, then score."""
    pred_map = {}
    dupes = []
    for sid, lab in pred:
        if sid in pred_map:
            dupes.append(sid)
        pred_map[sid] = lab
    gold_ids = [sid for sid, _ in gold]
    gold_set = set(gold_ids)
    missing = [sid for sid in gold_ids if sid not in pred_map]
    extra = [sid for sid, _ in pred if sid not in gold_set]
    problems = []
    if missing:
        problems.append(_id_error("missing", missing))
    if extra:
        problems.append(_id_error("extra", extra))
    if dupes:
        problems.append(_id_error("duplicate", dupes))
    if problems:
        raise MetricsError("; ".join(problems))
    cm = confusion([lab for _, lab in gold], [pred_map[sid] for sid in gold_ids])
    return report(cm)


def evaluate_files(gold_path, pred_path, language: str = "en",
                   has_confidence: bool = False) -> MetricsReport:
    gold = load_tsv(gold_path, language, "test", has_confidence=has_confidence)
    pred = read_predictions(pred_path)
    return evaluate_pairs([(r.sentence_id, r.label) for r in gold.rows], pred)


def write_metrics(rep: MetricsReport, path) -> None:
    atomic_write_text(path, METRICS_HEADER + "\n" + rep.as_row() + "\n")


def read_metrics(path) -> MetricsReport:
    lines = Path(path).read_text("utf-8").split("\n")
    if len(lines) < 2 or lines[0] != METRICS_HEADER:
        raise MetricsError(f"{path}: not a metrics file")
    vals = lines[1].split("\t")
    if len(vals) != len(fields(MetricsReport)):
        raise MetricsError(f"{path}: expected {len(METRIC_NAMES)} values")
    try:
        return MetricsReport(*(float(v) for v in vals))
    except ValueError as exc:
        raise MetricsError(f"{path}: {exc}") from None
