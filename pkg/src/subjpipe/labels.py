"""Subjectivity <-> 3-class sentiment head mapping.

SUBJ rides on the negative unit, OBJ on the positive unit. The neutral unit
carries no subjectivity meaning and is ignored at decode time.
"""

from __future__ import annotations

import enum

import numpy as np

from subjpipe.corpus import SubjLabel


class SentimentClass(enum.IntEnum):
    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2


_TO_SENTIMENT = {
    SubjLabel.SUBJ: SentimentClass.NEGATIVE,
    SubjLabel.OBJ: SentimentClass.POSITIVE,
}


def to_sentiment(label: SubjLabel) -> SentimentClass:
    return _TO_SENTIMENT[SubjLabel(label)]


def one_hot(cls: SentimentClass) -> np.ndarray:
    v = np.zeros(3)
    v[int(cls)] = 1.0
    return v


def from_logits(logits) -> SubjLabel:
    """SUBJ iff negative score strictly beats positive; ties go to OBJ."""
    scores = np.asarray(logits, dtype=np.float64)
    if scores.shape != (3,):
        raise ValueError(f"expected 3 logits, got shape {scores.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("non-finite logits")
    if scores[SentimentClass.NEGATIVE] > scores[SentimentClass.POSITIVE]:
        return SubjLabel.SUBJ
    return SubjLabel.OBJ


def decode_batch(logits: np.ndarray) -> list[SubjLabel]:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[1] != 3:
        raise ValueError(f"expected (n, 3) logits, got shape {logits.shape}")
    return [from_logits(row) for row in logits]
