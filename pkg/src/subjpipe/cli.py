"""``subjpipe`` command line: stats, preprocess, translate, train, predict,
evaluate, run, report.

Option values resolve as command-line flag > ``--config`` file > default.
The config file is flat ``key = value`` text; keys are the long flag names
(dashes or underscores).
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
import tempfile
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from subjpipe import corpus, metrics, preprocess as prep, trainer, translate
from subjpipe._io import atomic_write_text
from subjpipe.corpus import LANGUAGE_NAMES, LANGUAGES, CorpusError, CorpusSplit

logger = logging.getLogger("subjpipe")

DEFAULTS = {
    "lang": None,
    "train": None,
    "test": None,
    "out_dir": None,
    "seed": 0,
    "batch_size": 16,
    "lr": 2e-5,
    "epochs": 20,
    "confidence_weight": 1.2,
    "translate": False,
    "mt_stub": None,
    "cache": None,
    "dump_preprocessed": False,
    "dim": 16,
    "confidence": "auto",
    "model": None,
    "emoji_table": None,
}

TABLE2_COLUMNS = ("F1 Macro", "P Macro", "R Macro", "F1 SUBJ", "P SUBJ", "R SUBJ", "Accuracy")


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in {"1", "true", "yes", "on"}:
        return True
    if v in {"0", "false", "no", "off"}:
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {value!r}")


@dataclass(frozen=True)
class RunConfig:
    lang: str
    train: Optional[str]
    test: Optional[str]
    out_dir: Optional[str]
    seed: int
    batch_size: int
    lr: float
    epochs: int
    confidence_weight: float
    translate: bool
    mt_stub: Optional[str]
    cache: Optional[str]
    dump_preprocessed: bool
    dim: int
    confidence: str
    model: Optional[str]
    emoji_table: Optional[str]

    def __post_init__(self):
        if self.lang not in LANGUAGES:
            raise ValueError(f"--lang must be one of {', '.join(LANGUAGES)}")
        if self.confidence not in ("auto", "yes", "no"):
            raise ValueError("--confidence must be auto, yes or no")

    @property
    def train_config(self) -> trainer.TrainConfig:
        return trainer.TrainConfig(
            batch_size=self.batch_size,
            learning_rate=self.lr,
            epochs=self.epochs,
            seed=self.seed,
            confidence_weight=self.confidence_weight,
        )

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(lines) + "\n"


_CASTS = {
    "seed": int, "batch_size": int, "epochs": int, "dim": int,
    "lr": float, "confidence_weight": float,
    "translate": parse_bool, "dump_preprocessed": parse_bool,
}


def read_config_file(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _CASTS.get(key, str)(val)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    from_file = read_config_file(args.config) if args.config else {}
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in from_file:
            merged[key] = from_file[key]
        else:
            merged[key] = default
    if merged["lang"] is None:
        raise ValueError("--lang is required")
    return RunConfig(**merged)


# -- pipeline stages ---------------------------------------------------------

def _has_confidence(cfg: RunConfig, path) -> bool:
    if cfg.lang != "en" or cfg.confidence == "no":
        return False
    if cfg.confidence == "yes":
        return True
    return corpus.detect_confidence_column(path)


def _load(cfg: RunConfig, path, split: str, labeled: bool = True) -> CorpusSplit:
    if path is None:
        raise StageError("load", f"--{split} is required")
    try:
        conf = labeled and _has_confidence(cfg, path)
        out = corpus.load_tsv(path, cfg.lang, split, has_confidence=conf, labeled=labeled)
    except CorpusError as exc:
        raise StageError("load", str(exc)) from None
    if out.skipped_count:
        logger.warning("%s: skipped %d malformed rows", path, out.skipped_count)
    return out


def _preprocess(cfg: RunConfig, split: CorpusSplit) -> CorpusSplit:
    try:
        table = prep.load_emoji_table(cfg.emoji_table) if cfg.emoji_table else prep.default_table()
    except (OSError, ValueError) as exc:
        raise StageError("preprocess", str(exc)) from None
    return corpus.with_texts(split, [prep.preprocess(r.text, table) for r in split.rows])


def _translate(cfg: RunConfig, split: CorpusSplit, cache_default: Optional[Path]) -> CorpusSplit:
    if not cfg.translate or split.language == "en":
        return split
    try:
        backend = translate.resolve_backend(cfg.mt_stub)
        cache_path = cfg.cache if cfg.cache is not None else cache_default
        cache = translate.TranslationCache(cache_path)
        return translate.translate_split(split, backend, cache)
    except (translate.TranslationError, CorpusError) as exc:
        raise StageError("translate", str(exc)) from None


def _prepared(cfg: RunConfig, path, split: str, cache_default, labeled: bool = True) -> CorpusSplit:
    return _translate(cfg, _preprocess(cfg, _load(cfg, path, split, labeled)), cache_default)


def _cache_default(cfg: RunConfig) -> Optional[Path]:
    return Path(cfg.out_dir) / "translation_cache.tsv" if cfg.out_dir else None


def _train(cfg: RunConfig, split: CorpusSplit) -> trainer.TrainResult:
    try:
        vocab = trainer.build_vocab([r.text for r in split.rows])
        enc = trainer.reference_encoder(vocab, cfg.dim, cfg.seed)
        return trainer.train(split, enc, cfg.train_config)
    except (trainer.TrainingError, ValueError) as exc:
        raise StageError("train", str(exc)) from None


def _loss_trace(result: trainer.TrainResult) -> str:
    lines = ["epoch\tloss"]
    lines += [f"{i}\t{loss!r}" for i, loss in enumerate(result.epoch_losses, start=1)]
    return "\n".join(lines) + "\n"


def _score(split: CorpusSplit, preds) -> Optional[metrics.MetricsReport]:
    if any(r.label is None for r in split.rows):
        return None
    try:
        return metrics.evaluate_pairs([(r.sentence_id, r.label) for r in split.rows], preds)
    except metrics.MetricsError as exc:
        raise StageError("evaluate", str(exc)) from None


def _require_out_dir(cfg: RunConfig) -> Path:
    if not cfg.out_dir:
        raise StageError("config", "--out-dir is required")
    return Path(cfg.out_dir)


class _Staging:
    """Collect outputs in a hidden directory; publish them only on success."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        self.dir = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))

    def path(self, name: str) -> Path:
        return self.dir / name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                for p in sorted(self.dir.iterdir()):
                    p.replace(self.out_dir / p.name)
        finally:
            shutil.rmtree(self.dir, ignore_errors=True)
        return False


# -- commands ------------------------------------------------------------------

def cmd_stats(cfg: RunConfig, args) -> int:
    targets = [(s, p) for s, p in (("train", cfg.train), ("test", cfg.test)) if p]
    if not targets:
        raise StageError("stats", "give --train and/or --test")
    rows = []
    for split, path in targets:
        sp = _load(cfg, path, split)
        try:
            st = corpus.stats(sp)
        except CorpusError as exc:
            raise StageError("stats", str(exc)) from None
        rows.append(corpus.format_stats_row(cfg.lang, split, st))
    print("Language  Dataset(N)  OBJ(N)(%)  SUBJ(N)(%)")
    for row in rows:
        print(row)
    return 0


def cmd_preprocess(cfg: RunConfig, args) -> int:
    out = _require_out_dir(cfg)
    targets = [(s, p) for s, p in (("train", cfg.train), ("test", cfg.test)) if p]
    if not targets:
        raise StageError("preprocess", "give --train and/or --test")
    with _Staging(out) as st:
        for split, path in targets:
            sp = _preprocess(cfg, _load(cfg, path, split))
            corpus.write_tsv(sp, st.path(f"{split}.preprocessed.tsv"))
    return 0


def cmd_translate(cfg: RunConfig, args) -> int:
    out = _require_out_dir(cfg)
    cfg_t = replace(cfg, translate=True)
    targets = [(s, p) for s, p in (("train", cfg.train), ("test", cfg.test)) if p]
    if not targets:
        raise StageError("translate", "give --train and/or --test")
    with _Staging(out) as st:
        for split, path in targets:
            sp = _translate(cfg_t, _load(cfg, path, split), _cache_default(cfg))
            corpus.write_tsv(sp, st.path(f"{split}.en.tsv"))
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    out = _require_out_dir(cfg)
    train_split = _prepared(cfg, cfg.train, "train", _cache_default(cfg))
    result = _train(cfg, train_split)
    with _Staging(out) as st:
        trainer.save_encoder(result.encoder, st.path("model.npz"))
        atomic_write_text(st.path("loss_trace.tsv"), _loss_trace(result))
    print(f"trained {cfg.epochs} epochs, final loss {result.epoch_losses[-1]:.6f}")
    return 0


def cmd_predict(cfg: RunConfig, args) -> int:
    out = _require_out_dir(cfg)
    model_path = cfg.model or str(out / "model.npz")
    try:
        enc = trainer.load_encoder(model_path)
    except (trainer.TrainingError, OSError, ValueError, KeyError) as exc:
        raise StageError("predict", str(exc)) from None
    test_split = _prepared(cfg, cfg.test, "test", _cache_default(cfg), labeled=not args.unlabeled)
    preds = trainer.predict(test_split, enc)
    with _Staging(out) as st:
        corpus.write_predictions([p[0] for p in preds], [p[1] for p in preds],
                                 st.path("predictions.tsv"))
    return 0


def cmd_evaluate(cfg: RunConfig, args) -> int:
    gold_path = args.gold or cfg.test
    if not gold_path or not args.pred:
        raise StageError("evaluate", "--gold (or --test) and --pred are required")
    try:
        conf = _has_confidence(cfg, gold_path)
        rep = metrics.evaluate_files(gold_path, args.pred, cfg.lang, conf)
    except (CorpusError, metrics.MetricsError) as exc:
        raise StageError("evaluate", str(exc)) from None
    print(metrics.METRICS_HEADER)
    print(rep.as_row())
    if cfg.out_dir:
        with _Staging(Path(cfg.out_dir)) as st:
            metrics.write_metrics(rep, st.path("metrics.tsv"))
    return 0


def format_results_table(rows: list[tuple[str, metrics.MetricsReport]]) -> str:
    head = ("Language",) + TABLE2_COLUMNS
    body = [(name,) + tuple(f"{v:.4f}" for v in (
        r.f1_macro, r.p_macro, r.r_macro, r.f1_subj, r.p_subj, r.r_subj, r.accuracy))
        for name, r in rows]
    widths = [max(len(line[i]) for line in [head] + body) for i in range(len(head))]

    def fmt(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    rule = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([fmt(head), rule] + [fmt(b) for b in body]) + "\n"


def _report_text(cfg: RunConfig, train_split, test_split, result, train_rep, test_rep) -> str:
    name = LANGUAGE_NAMES[cfg.lang]
    lines = [
        f"Subjectivity run: {name}",
        "",
        f"train rows: {len(train_split)} (skipped {train_split.skipped_count})",
        f"test rows:  {len(test_split)} (skipped {test_split.skipped_count})",
        f"epochs: {cfg.epochs}  batch size: {cfg.batch_size}  lr: {cfg.lr}  "
        f"confidence weight: {cfg.confidence_weight}  seed: {cfg.seed}",
        f"loss: first epoch {result.epoch_losses[0]:.6f}, last epoch {result.epoch_losses[-1]:.6f}",
        "",
    ]
    rows = [(f"{name} (train)", train_rep)]
    if test_rep is not None:
        rows.append((name, test_rep))
    lines.append(format_results_table(rows))
    return "\n".join(lines)


def cmd_run(cfg: RunConfig, args) -> int:
    out = _require_out_dir(cfg)
    cache_default = _cache_default(cfg)
    with _Staging(out) as st:
        train_split = _prepared(cfg, cfg.train, "train", cache_default)
        test_split = _prepared(cfg, cfg.test, "test", cache_default, labeled=not args.unlabeled)
        if cfg.dump_preprocessed:
            corpus.write_tsv(train_split, st.path("train.preprocessed.tsv"))
            corpus.write_tsv(test_split, st.path("test.preprocessed.tsv"))
        result = _train(cfg, train_split)
        train_rep = _score(train_split, trainer.predict(train_split, result.encoder))
        preds = trainer.predict(test_split, result.encoder)
        test_rep = _score(test_split, preds)

        trainer.save_encoder(result.encoder, st.path("model.npz"))
        atomic_write_text(st.path("loss_trace.tsv"), _loss_trace(result))
        corpus.write_predictions([p[0] for p in preds], [p[1] for p in preds],
                                 st.path("predictions.tsv"))
        metrics.write_metrics(train_rep, st.path("train_metrics.tsv"))
        if test_rep is not None:
            metrics.write_metrics(test_rep, st.path("metrics.tsv"))
        atomic_write_text(st.path("config.txt"), cfg.dumps())
        atomic_write_text(st.path("report.txt"),
                          _report_text(cfg, train_split, test_split, result, train_rep, test_rep))
    print(f"wrote outputs to {out}")
    if test_rep is not None:
        print(metrics.METRICS_HEADER)
        print(test_rep.as_row())
    return 0


def _report_label(spec: str) -> tuple[str, Path]:
    if "=" in spec:
        name, path = spec.split("=", 1)
        return LANGUAGE_NAMES.get(name, name), Path(path)
    p = Path(spec)
    stem = p.stem
    if stem == "metrics" and p.parent.name:
        stem = p.parent.name
    return LANGUAGE_NAMES.get(stem, stem), p


def cmd_report(args) -> int:
    rows = []
    for spec in args.metrics_files:
        name, path = _report_label(spec)
        try:
            rows.append((name, metrics.read_metrics(path)))
        except (OSError, metrics.MetricsError) as exc:
            raise StageError("report", str(exc)) from None
    table = format_results_table(rows)
    if args.out:
        atomic_write_text(args.out, table)
    sys.stdout.write(table)
    return 0


# -- argument parsing ------------------------------------------------------------

def _shared_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--lang", choices=LANGUAGES)
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int, help="default 16")
    p.add_argument("--lr", type=float, help="default 2e-5")
    p.add_argument("--epochs", type=int, help="default 20")
    p.add_argument("--confidence-weight", dest="confidence_weight", type=float, help="default 1.2")
    p.add_argument("--translate", nargs="?", const=True, type=parse_bool,
                   help="translate non-English text to English (--translate=false to disable)")
    p.add_argument("--mt-stub", dest="mt_stub", help="offline translation table (TSV)")
    p.add_argument("--cache", help="translation cache file (default OUT_DIR/translation_cache.tsv)")
    p.add_argument("--dump-preprocessed", dest="dump_preprocessed", nargs="?", const=True,
                   type=parse_bool)
    p.add_argument("--dim", type=int, help="reference encoder width (default 16)")
    p.add_argument("--confidence", choices=("auto", "yes", "no"),
                   help="English solved_conflict column (auto: detect from header)")
    p.add_argument("--model", help="checkpoint path (default OUT_DIR/model.npz)")
    p.add_argument("--emoji-table", dest="emoji_table")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_parser()
    parser = argparse.ArgumentParser(prog="subjpipe", description="Multilingual subjectivity classification pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("stats", parents=[shared], help="per-language label distribution")
    sub.add_parser("preprocess", parents=[shared], help="demojize and strip mentions/URLs")
    sub.add_parser("translate", parents=[shared], help="translate splits to English")
    sub.add_parser("train", parents=[shared], help="train the reference encoder")
    p = sub.add_parser("predict", parents=[shared], help="write predictions.tsv")
    p.add_argument("--unlabeled", action="store_true", help="test file has no label column")
    p = sub.add_parser("evaluate", parents=[shared], help="score a prediction file")
    p.add_argument("--gold")
    p.add_argument("--pred")
    p = sub.add_parser("run", parents=[shared], help="full pipeline end to end")
    p.add_argument("--unlabeled", action="store_true", help="test file has no label column")
    p = sub.add_parser("report", help="summary table over metrics files")
    p.add_argument("metrics_files", nargs="+", metavar="[NAME=]METRICS_TSV")
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


COMMANDS = {
    "stats": cmd_stats,
    "preprocess": cmd_preprocess,
    "translate": cmd_translate,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except StageError as exc:
        print(f"subjpipe {args.command}: error in {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"subjpipe {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
