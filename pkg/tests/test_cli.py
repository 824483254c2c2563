import os

import pytest

from subjpipe.cli import build_parser, main, read_config_file, resolve_config
from subjpipe.corpus import load_tsv, read_predictions
from tests.conftest import toy_rows, write_counts, write_toy

ITALIAN = [
    ("i0", "Il rapporto è un fatto.", "OBJ"),
    ("i1", "Il rapporto è terribile! @tizio http://x.it", "SUBJ"),
    ("i2", "La legge è stata approvata.", "OBJ"),
    ("i3", "Che vergogna ❤", "SUBJ"),
]
STUB = {
    "Il rapporto è un fatto.": "The report is a fact.",
    "Il rapporto è terribile!": "The report is awful!",
    "La legge è stata approvata.": "The law was approved.",
    "Che vergogna :red_heart:": "What a shame :red_heart:",
}


def _stub_file(tmp_path):
    p = tmp_path / "stub.tsv"
    p.write_text("".join(f"{k}\t{v}\n" for k, v in STUB.items()), encoding="utf-8")
    return p


def test_stats(tmp_path, capsys):
    f = write_counts(tmp_path / "ar.tsv", 905, 280)
    assert main(["stats", "--lang", "ar", "--train", str(f)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "Language  Dataset(N)  OBJ(N)(%)  SUBJ(N)(%)"
    assert out[1] == "Arabic  Train (1185)  905 (76.37)  280 (23.63)"


def test_stats_bulgarian_test(tmp_path, capsys):
    f = write_counts(tmp_path / "bg.tsv", 143, 107)
    assert main(["stats", "--lang", "bg", "--test", str(f)]) == 0
    row = capsys.readouterr().out.splitlines()[1]
    assert "143 (57.20)" in row and "107 (42.80)" in row


def test_stats_empty_file(tmp_path, capsys):
    f = tmp_path / "empty.tsv"
    f.write_text("")
    assert main(["stats", "--lang", "en", "--train", str(f)]) == 1
    assert "empty split" in capsys.readouterr().err


def test_stats_missing_file(tmp_path, capsys):
    assert main(["stats", "--lang", "en", "--train", str(tmp_path / "x.tsv")]) == 1
    assert "x.tsv" in capsys.readouterr().err


def _run(tmp_path, out, *extra, train=None, test=None, lang="en"):
    train = train or write_toy(tmp_path / "train.tsv")
    test = test or train
    argv = ["run", "--lang", lang, "--train", str(train), "--test", str(test),
            "--out-dir", str(out), "--lr", "0.5", "--epochs", "60", "--dim", "8", *extra]
    return main(argv)


def test_run_end_to_end(tmp_path):
    out = tmp_path / "out"
    assert _run(tmp_path, out) == 0
    preds = read_predictions(out / "predictions.tsv")
    assert [sid for sid, _ in preds] == [sid for sid, _, _ in toy_rows()]
    header, values = (out / "metrics.tsv").read_text().splitlines()
    assert len(header.split("\t")) == 7 and len(values.split("\t")) == 7
    assert (out / "train_metrics.tsv").exists() and (out / "model.npz").exists()
    assert "F1 Macro" in (out / "report.txt").read_text()
    assert not [p for p in out.iterdir() if p.name.startswith(".")]


def test_run_is_byte_identical_across_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(tmp_path, a, "--seed", "5") == 0
    assert _run(tmp_path, b, "--seed", "5") == 0
    for name in ("predictions.tsv", "metrics.tsv", "loss_trace.tsv", "model.npz", "report.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_translate_flag_is_passthrough_for_english(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(tmp_path, a, "--translate=false") == 0
    assert _run(tmp_path, b, "--translate=true") == 0
    for name in ("predictions.tsv", "metrics.tsv", "train_metrics.tsv", "loss_trace.tsv",
                 "model.npz", "report.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    assert not (b / "translation_cache.tsv").exists()


def test_run_translates_italian_before_training(tmp_path):
    train = write_toy(tmp_path / "it.tsv", ITALIAN)
    out = tmp_path / "out"
    rc = _run(tmp_path, out, "--translate", "--mt-stub", str(_stub_file(tmp_path)),
              "--dump-preprocessed", train=train, lang="it")
    assert rc == 0
    dumped = load_tsv(out / "train.preprocessed.tsv", "en", "train")
    assert [r.text for r in dumped.rows] == list(STUB.values())
    assert (out / "translation_cache.tsv").exists()


def test_run_without_translation_keeps_source_text(tmp_path):
    train = write_toy(tmp_path / "it.tsv", ITALIAN)
    out = tmp_path / "out"
    assert _run(tmp_path, out, "--dump-preprocessed", train=train, lang="it") == 0
    dumped = load_tsv(out / "train.preprocessed.tsv", "it", "train")
    assert dumped.rows[1].text == "Il rapporto è terribile!"
    assert dumped.rows[3].text == "Che vergogna :red_heart:"


def test_run_failure_leaves_no_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    rc = _run(tmp_path, out, test=tmp_path / "missing.tsv")
    assert rc == 1
    assert "load" in capsys.readouterr().err
    assert list(out.iterdir()) == []


def test_run_unlabeled_test(tmp_path):
    test = tmp_path / "unlabeled.tsv"
    test.write_text("sentence_id\tsentence\nq1\tthis is a fact\nq2\tthis is awful\n")
    out = tmp_path / "out"
    assert _run(tmp_path, out, "--unlabeled", test=test) == 0
    assert [sid for sid, _ in read_predictions(out / "predictions.tsv")] == ["q1", "q2"]
    assert not (out / "metrics.tsv").exists()


def test_english_confidence_column_is_used(tmp_path):
    train = write_toy(tmp_path / "en.tsv", confidence=True)
    out = tmp_path / "out"
    assert _run(tmp_path, out, train=train) == 0
    assert "confidence weight: 1.2" in (out / "report.txt").read_text()


def test_train_predict_evaluate_commands(tmp_path, capsys):
    train = write_toy(tmp_path / "train.tsv")
    out = tmp_path / "out"
    common = ["--lang", "en", "--out-dir", str(out)]
    assert main(["train", *common, "--train", str(train), "--lr", "0.5", "--epochs", "60"]) == 0
    assert (out / "model.npz").exists() and (out / "loss_trace.tsv").exists()
    assert main(["predict", *common, "--test", str(train)]) == 0
    capsys.readouterr()
    assert main(["evaluate", *common, "--gold", str(train), "--pred", str(out / "predictions.tsv")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("f1_macro") and lines[1].endswith("1.0000")
    assert (out / "metrics.tsv").exists()


def test_evaluate_reports_missing_ids(tmp_path, capsys):
    gold = write_toy(tmp_path / "gold.tsv")
    pred = tmp_path / "pred.tsv"
    pred.write_text("sentence_id\tlabel\no0\tOBJ\n")
    assert main(["evaluate", "--lang", "en", "--gold", str(gold), "--pred", str(pred)]) == 1
    assert "missing prediction ids" in capsys.readouterr().err


def test_preprocess_and_translate_commands(tmp_path):
    src = write_toy(tmp_path / "it.tsv", ITALIAN)
    out = tmp_path / "out"
    assert main(["preprocess", "--lang", "it", "--train", str(src), "--out-dir", str(out)]) == 0
    pre = load_tsv(out / "train.preprocessed.tsv", "it", "train")
    assert pre.rows[1].text == "Il rapporto è terribile!"
    assert main(["translate", "--lang", "it", "--train", str(out / "train.preprocessed.tsv"),
                 "--out-dir", str(out), "--mt-stub", str(_stub_file(tmp_path))]) == 0
    en = load_tsv(out / "train.en.tsv", "en", "train")
    assert [r.text for r in en.rows] == list(STUB.values())


def _metrics_file(path, values):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("f1_macro\tp_macro\tr_macro\tf1_subj\tp_subj\tr_subj\taccuracy\n"
                    + "\t".join(f"{v:.4f}" for v in values) + "\n")
    return path


def test_report_single_file(tmp_path, capsys):
    f = _metrics_file(tmp_path / "de" / "metrics.tsv", [1.0] * 7)
    assert main(["report", str(f)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [c.strip() for c in lines[0].strip("|").split("|")] == [
        "Language", "F1 Macro", "P Macro", "R Macro", "F1 SUBJ", "P SUBJ", "R SUBJ", "Accuracy"]
    cells = [c.strip() for c in lines[2].strip("|").split("|")]
    assert cells == ["German"] + ["1.0000"] * 7


def test_report_six_files_in_order(tmp_path, capsys):
    langs = ["ar", "bg", "en", "de", "it", "multi"]
    files = [str(_metrics_file(tmp_path / f"{lang}.tsv", [i / 10] * 7)) for i, lang in enumerate(langs)]
    assert main(["report", *files]) == 0
    rows = capsys.readouterr().out.splitlines()[2:]
    assert [r.strip("|").split("|")[0].strip() for r in rows] == [
        "Arabic", "Bulgarian", "English", "German", "Italian", "Multilingual"]


def test_report_requires_files(capsys):
    with pytest.raises(SystemExit) as info:
        main(["report"])
    assert info.value.code == 2


def test_report_unreadable_file(tmp_path, capsys):
    assert main(["report", str(tmp_path / "nope.tsv")]) == 1


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("lang = it\nepochs = 7\nbatch-size = 4\ntranslate = true  # comment\n")
    assert read_config_file(cfg_file)["batch_size"] == 4
    args = build_parser().parse_args(["run", "--config", str(cfg_file), "--epochs", "3"])
    cfg = resolve_config(args)
    assert (cfg.lang, cfg.epochs, cfg.batch_size, cfg.translate, cfg.lr) == ("it", 3, 4, True, 2e-5)


def test_config_rejects_unknown_keys(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("learning_rate = 1\n")
    with pytest.raises(ValueError, match="unknown key"):
        read_config_file(cfg_file)


def test_shared_flag_defaults():
    args = build_parser().parse_args(["run", "--lang", "en"])
    cfg = resolve_config(args)
    assert (cfg.batch_size, cfg.lr, cfg.epochs, cfg.confidence_weight, cfg.translate) == (
        16, 2e-5, 20, 1.2, False)


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    f = write_counts(tmp_path / "de.tsv", 492, 308)
    res = subprocess.run([sys.executable, "-m", "subjpipe", "stats", "--lang", "de", "--train", str(f)],
                         capture_output=True, text=True, env={**os.environ})
    assert res.returncode == 0
    assert "German  Train (800)  492 (61.50)  308 (38.50)" in res.stdout
