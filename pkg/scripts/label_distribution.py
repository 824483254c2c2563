"""Rebuild the per-language label distribution table from synthetic files.

Each file carries exactly the published OBJ/SUBJ counts, so the printed
percentages depend only on the counts and the rounding rule.  The script
prints our rows next to the published ones and flags disagreements.

    python3 scripts/label_distribution.py
"""

import sys
from decimal import Decimal

from subjpipe.corpus import CorpusSplit, LabeledSentence, SubjLabel, format_stats_row, stats

# (language, split, OBJ count, SUBJ count, published OBJ %, published SUBJ %)
PUBLISHED = [
    ("ar", "train", 905, 280, "76.37", "23.63"),
    ("ar", "test", 425, 323, "56.81", "43.18"),
    ("bg", "train", 406, 323, "55.69", "44.23"),
    ("bg", "test", 143, 107, "57.2", "42.8"),
    ("en", "train", 532, 298, "64.09", "35.9"),
    ("en", "test", 362, 122, "74.79", "25.2"),
    ("de", "train", 492, 308, "61.5", "38.5"),
    ("de", "test", 226, 111, "67.07", "32.93"),
    ("it", "train", 1231, 382, "76.31", "23.68"),
    ("it", "test", 377, 136, "73.4", "26.5"),
    ("multi", "train", 3568, 1591, "69.16", "30.83"),
    ("multi", "test", 250, 250, "50", "50"),
]


def synthetic_split(lang, split, n_obj, n_subj):
    rows = [LabeledSentence(f"o{i}", "x", SubjLabel.OBJ, lang) for i in range(n_obj)]
    rows += [LabeledSentence(f"s{i}", "x", SubjLabel.SUBJ, lang) for i in range(n_subj)]
    return CorpusSplit(split, lang, tuple(rows))


def main():
    bad = 0
    for lang, split, n_obj, n_subj, p_obj, p_subj in PUBLISHED:
        st = stats(synthetic_split(lang, split, n_obj, n_subj))
        got = (st.obj_pct, st.subj_pct)
        want = (Decimal(p_obj), Decimal(p_subj))
        ok = all(Decimal(f"{g:.2f}") == w for g, w in zip(got, want))
        bad += not ok
        flag = "" if ok else f"   <- published {p_obj} / {p_subj}"
        print(format_stats_row(lang, split, st) + flag)
    print(f"\n{len(PUBLISHED) - bad} of {len(PUBLISHED)} rows agree with the published table")
    return 0


if __name__ == "__main__":
    sys.exit(main())
