"""Shared-task TSV corpora: loading, distribution statistics, prediction files.

The loader is line-oriented and does not go through csv/pandas: the official
files contain stray tabs inside sentences, so each line is split on tabs and
the surplus interior fields are folded back into the text column.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from subjpipe._io import atomic_write_text

logger = logging.getLogger(__name__)

LANGUAGES = ("ar", "bg", "en", "de", "it", "multi")
SPLITS = ("train", "dev", "test")

LANGUAGE_NAMES = {
    "ar": "Arabic",
    "bg": "Bulgarian",
    "en": "English",
    "de": "German",
    "it": "Italian",
    "multi": "Multilingual",
}

_TRUE = {"1", "true", "True"}
_FALSE = {"0", "false", "False"}

PREDICTION_HEADER = "sentence_id\tlabel"


class CorpusError(ValueError):
    pass


class SubjLabel(str, enum.Enum):
    OBJ = "OBJ"
    SUBJ = "SUBJ"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value: str) -> Optional["SubjLabel"]:
        """Exact, case-sensitive parse; None for anything else."""
        try:
            return cls(value)
        except ValueError:
            return None


@dataclass(frozen=True)
class LabeledSentence:
    sentence_id: str
    text: str
    label: Optional[SubjLabel]
    language: str
    solved_conflict: Optional[bool] = None

    def __post_init__(self):
        if self.language not in LANGUAGES:
            raise CorpusError(f"unknown language tag {self.language!r}")
        if not self.text.strip():
            raise CorpusError(f"empty text for sentence {self.sentence_id!r}")
        if self.solved_conflict is not None and self.language != "en":
            raise CorpusError("solved_conflict is only defined for English rows")


@dataclass(frozen=True)
class CorpusSplit:
    split: str
    language: str
    rows: tuple[LabeledSentence, ...]
    skipped_count: int = 0

    def __post_init__(self):
        if self.split not in SPLITS:
            raise CorpusError(f"unknown split tag {self.split!r}")
        if self.language not in LANGUAGES:
            raise CorpusError(f"unknown language tag {self.language!r}")
        # tolerate lists from callers; freeze them
        object.__setattr__(self, "rows", tuple(self.rows))
        seen = set()
        for row in self.rows:
            if row.sentence_id in seen:
                raise CorpusError(f"duplicate sentence_id {row.sentence_id!r}")
            seen.add(row.sentence_id)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def ids(self) -> list[str]:
        return [r.sentence_id for r in self.rows]

    @property
    def labels(self) -> list[Optional[SubjLabel]]:
        return [r.label for r in self.rows]


@dataclass(frozen=True)
class DistributionStats:
    total: int
    obj_count: int
    subj_count: int
    obj_pct: float
    subj_pct: float


def _pct(n: int, total: int) -> float:
    # round-half-up on the exact rational, so 12.345 never drifts to 12.34
    scaled = n * 10000
    q, r = divmod(scaled, total)
    if 2 * r >= total:
        q += 1
    return q / 100


def _read_lines(path: Path) -> list[str]:
    data = path.read_bytes().decode("utf-8", errors="replace")
    lines = data.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def _parse_bool(value: str) -> Optional[bool]:
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    return None


def _parse_line(line: str, has_confidence: bool, labeled: bool):
    """Return (id, text, label, conflict) or None when the line is unrecoverable."""
    fields = line.split("\t")
    tail = (1 if labeled else 0) + (1 if has_confidence else 0)
    if len(fields) < 2 + tail:
        return None
    sid = fields[0]
    text = "\t".join(fields[1 : len(fields) - tail])
    label = None
    conflict = None
    if labeled:
        label = SubjLabel.parse(fields[len(fields) - tail])
        if label is None:
            return None
    if has_confidence:
        conflict = _parse_bool(fields[-1])
        if conflict is None:
            return None
    if not sid or not text.strip():
        return None
    return sid, text, label, conflict


def _is_header(line: str, has_confidence: bool, labeled: bool) -> bool:
    fields = line.split("\t")
    if not labeled:
        return fields[0].strip().lower() in {"sentence_id", "id"}
    idx = -2 if has_confidence else -1
    if len(fields) < -idx:
        return True
    return SubjLabel.parse(fields[idx]) is None


def detect_confidence_column(path) -> bool:
    """True when the file's header names a trailing ``solved_conflict`` column."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"file not found: {path}")
    lines = _read_lines(path)
    if not lines:
        return False
    return lines[0].split("\t")[-1].strip() == "solved_conflict"


def load_tsv(path, language: str, split: str, has_confidence: bool = False,
             labeled: bool = True) -> CorpusSplit:
    """Parse a shared-task TSV file into a :class:`CorpusSplit`.

    Layout is ``sentence_id, sentence, label`` plus a trailing
    ``solved_conflict`` column when ``has_confidence`` is set. Rows with more
    tabs than the layout allows keep the first field as id, the trailing
    field(s) as label/confidence, and everything in between as text. Rows
    that still do not parse are counted in ``skipped_count`` and logged.
    With ``labeled=False`` the layout is ``sentence_id, sentence`` (prediction
    input without gold labels).
    """
    path = Path(path)
    if language not in LANGUAGES:
        raise CorpusError(f"unknown language tag {language!r}")
    if has_confidence and language != "en":
        raise CorpusError("confidence column is only defined for English corpora")
    if has_confidence and not labeled:
        raise CorpusError("confidence column requires labeled input")
    if not path.exists():
        raise CorpusError(f"file not found: {path}")

    lines = _read_lines(path)
    start = 0
    if lines and _is_header(lines[0], has_confidence, labeled):
        start = 1
    if len(lines) - start == 0:
        raise CorpusError(f"empty split: no data rows in {path}")

    rows = []
    seen = {}
    skipped = 0
    for lineno in range(start, len(lines)):
        parsed = _parse_line(lines[lineno], has_confidence, labeled)
        if parsed is None:
            skipped += 1
            logger.warning("%s:%d: skipping malformed row", path, lineno + 1)
            continue
        sid, text, label, conflict = parsed
        if sid in seen:
            raise CorpusError(
                f"duplicate sentence_id {sid!r} in {path} "
                f"(lines {seen[sid]} and {lineno + 1})")
        seen[sid] = lineno + 1
        rows.append(LabeledSentence(sid, text, label, language, conflict))
    return CorpusSplit(split, language, tuple(rows), skipped)


def stats(split: CorpusSplit) -> DistributionStats:
    labels = [r.label for r in split.rows if r.label is not None]
    if not labels:
        raise CorpusError("empty split")
    obj = sum(1 for lab in labels if lab is SubjLabel.OBJ)
    subj = len(labels) - obj
    total = len(labels)
    return DistributionStats(total, obj, subj, _pct(obj, total), _pct(subj, total))


def format_stats_row(language: str, split: str, st: DistributionStats) -> str:
    """One distribution line: ``Arabic  Train (1185)  905 (76.37)  280 (23.63)``."""
    name = LANGUAGE_NAMES.get(language, language)
    return (f"{name}  {split.capitalize()} ({st.total})  "
            f"{st.obj_count} ({st.obj_pct:.2f})  {st.subj_count} ({st.subj_pct:.2f})")


def write_tsv(split: CorpusSplit, path) -> None:
    """Write a split back out in the layout :func:`load_tsv` reads."""
    has_conf = any(r.solved_conflict is not None for r in split.rows)
    labeled = all(r.label is not None for r in split.rows)
    head = ["sentence_id", "sentence"]
    if labeled:
        head.append("label")
    if has_conf:
        head.append("solved_conflict")
    out = ["\t".join(head)]
    for r in split.rows:
        cols = [r.sentence_id, r.text]
        if labeled:
            cols.append(r.label.value)
        if has_conf:
            cols.append("1" if r.solved_conflict else "0")
        out.append("\t".join(cols))
    atomic_write_text(path, "\n".join(out) + "\n")


def write_predictions(ids: Sequence[str], labels: Sequence[SubjLabel], path) -> None:
    if len(ids) != len(labels):
        raise CorpusError(f"length mismatch: {len(ids)} ids vs {len(labels)} labels")
    lines = [PREDICTION_HEADER]
    for sid, lab in zip(ids, labels):
        lines.append(f"{sid}\t{SubjLabel(lab).value}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_predictions(path) -> list[tuple[str, SubjLabel]]:
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"file not found: {path}")
    lines = _read_lines(path)
    if not lines or lines[0] != PREDICTION_HEADER:
        raise CorpusError(f"{path}: missing prediction header {PREDICTION_HEADER!r}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        lab = SubjLabel.parse(fields[-1]) if len(fields) == 2 else None
        if lab is None:
            raise CorpusError(f"{path}:{lineno}: malformed prediction row {line!r}")
        out.append((fields[0], lab))
    return out


def with_texts(split: CorpusSplit, texts: Iterable[str], language: Optional[str] = None) -> CorpusSplit:
    """Copy of ``split`` with row texts replaced, everything else kept."""
    lang = language or split.language
    rows = []
    for r, t in zip(split.rows, texts, strict=True):
        conflict = r.solved_conflict if lang == "en" else None
        rows.append(LabeledSentence(r.sentence_id, t, r.label, lang, conflict))
    return CorpusSplit(split.split, lang, tuple(rows), split.skipped_count)
