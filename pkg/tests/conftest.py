import pytest

from subjpipe.corpus import CorpusSplit, LabeledSentence, SubjLabel

# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def write_counts(path, n_obj, n_subj, header=True, prefix="r"):
    """Synthetic corpus with exactly the given label counts."""
    lines = ["sentence_id\tsentence\tlabel"] if header else []
    for i in range(n_obj):
        lines.append(f"{prefix}o{i}\tObjective sentence number {i}.\tOBJ")
    for i in range(n_subj):
        lines.append(f"{prefix}s{i}\tSubjective sentence number {i}!\tSUBJ")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def toy_rows(language="en"):
    """20 linearly separable rows: 'fact' marks OBJ, 'awful' marks SUBJ."""
    rows = []
    for i in range(10):
        rows.append((f"o{i}", f"the report is a fact number {i}", "OBJ"))
        rows.append((f"s{i}", f"the report is awful number {i}", "SUBJ"))
    return rows


def write_toy(path, rows=None, confidence=False):
    rows = rows if rows is not None else toy_rows()
    head = "sentence_id\tsentence\tlabel" + ("\tsolved_conflict" if confidence else "")
    lines = [head]
    for k, (sid, text, lab) in enumerate(rows):
        extra = f"\t{k % 2}" if confidence else ""
        lines.append(f"{sid}\t{text}\t{lab}{extra}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def toy_split():
    rows = [LabeledSentence(sid, text, SubjLabel(lab), "en") for sid, text, lab in toy_rows()]
    return CorpusSplit("train", "en", tuple(rows))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        line = f"[{'PASS' if ok else 'FAIL'}] {num}. {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
