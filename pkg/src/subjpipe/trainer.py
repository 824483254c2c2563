"""Fine-tuning a 3-class sentiment encoder on subjectivity labels.

Targets go through the SUBJ->negative / OBJ->positive mapping; per-example
losses are scaled by the annotation-confidence weight and normalized by the
total weight of the batch.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from subjpipe._io import atomic_write_bytes
from subjpipe.corpus import CorpusSplit, LabeledSentence, SubjLabel
from subjpipe.labels import decode_batch, to_sentiment

logger = logging.getLogger(__name__)

PAD_ID = 0
OOV_ID = 1
PAD_TOKEN = "<pad>"
OOV_TOKEN = "<unk>"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 2e-5
    epochs: int = 20
    seed: int = 0
    confidence_weight: float = 1.2

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if not self.confidence_weight > 0:
            raise ValueError("confidence_weight must be positive")


class Encoder(Protocol):
    """What the trainer needs from a sequence classifier.

    ``params`` is a flat float64 vector; updating it in place updates the
    model. ``backward`` returns d(loss)/d(params) given d(loss)/d(logits).
    """

    params: np.ndarray

    def tokenize(self, text: str) -> list[int]: ...

    def forward(self, ids: np.ndarray, mask: np.ndarray) -> np.ndarray: ...

    def backward(self, ids: np.ndarray, mask: np.ndarray, dlogits: np.ndarray) -> np.ndarray: ...

    def copy(self) -> "Encoder": ...


class Optimizer(Protocol):
    def step(self, params: np.ndarray, grad: np.ndarray) -> None: ...


class SGD:
    """Constant-rate gradient descent; updates ``params`` in place."""

    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        params -= self.lr * grad


def tokenize_words(text: str) -> list[str]:
    return text.lower().split()


def build_vocab(texts: Sequence[str]) -> list[str]:
    """Distinct lowercase whitespace tokens in first-seen order."""
    seen = {}
    for t in texts:
        for tok in tokenize_words(t):
            seen.setdefault(tok, None)
    return list(seen)


class ReferenceEncoder:
    """Mean of token embeddings followed by one linear layer to 3 logits.

    Parameter layout in the flat vector: embeddings (V x dim), then weights
    (dim x 3), then bias (3). Row 0 of the embedding table is padding and
    row 1 is the out-of-vocabulary token.
    """

    def __init__(self, vocab: Sequence[str], dim: int, seed: int = 0,
                 params: Optional[np.ndarray] = None):
        if not vocab:
            raise ValueError("empty vocabulary")
        if dim < 2:
            raise ValueError("dim must be >= 2")
        tokens = []
        index = {}
        for tok in vocab:
            tok = tok.lower()
            if tok in index or tok in (PAD_TOKEN, OOV_TOKEN):
                continue
            index[tok] = len(tokens) + 2
            tokens.append(tok)
        self.vocab = tokens
        self.index = index
        self.dim = dim
        self.seed = seed
        self.n_tokens = len(tokens) + 2
        n = self.n_tokens * dim + dim * 3 + 3
        if params is None:
            rng = np.random.default_rng(seed)
            params = rng.uniform(-0.1, 0.1, size=n)
        else:
            params = np.array(params, dtype=np.float64)
            if params.shape != (n,):
                raise ValueError(f"expected {n} parameters, got {params.shape}")
        self.params = params
        self._bind()

    def _bind(self):
        v, d = self.n_tokens, self.dim
        p = self.params
        self.emb = p[: v * d].reshape(v, d)
        self.weight = p[v * d : v * d + d * 3].reshape(d, 3)
        self.bias = p[v * d + d * 3 :]

    def copy(self) -> "ReferenceEncoder":
        return ReferenceEncoder(self.vocab, self.dim, self.seed, params=self.params.copy())

    def tokenize(self, text: str) -> list[int]:
        return [self.index.get(tok, OOV_ID) for tok in tokenize_words(text)]

    def _pool(self, ids, mask):
        mask = np.asarray(mask, dtype=np.float64)
        counts = mask.sum(axis=1)
        summed = np.einsum("bl,bld->bd", mask, self.emb[np.asarray(ids)])
        # no real tokens -> zero vector
        denom = np.where(counts > 0, counts, 1.0)
        return summed / denom[:, None], mask, denom

    def forward(self, ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
        pooled, _, _ = self._pool(ids, mask)
        return pooled @ self.weight + self.bias

    def backward(self, ids: np.ndarray, mask: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids)
        pooled, mask, denom = self._pool(ids, mask)
        grad = np.zeros_like(self.params)
        v, d = self.n_tokens, self.dim
        g_emb = grad[: v * d].reshape(v, d)
        g_w = grad[v * d : v * d + d * 3].reshape(d, 3)
        g_b = grad[v * d + d * 3 :]
        g_w += pooled.T @ dlogits
        g_b += dlogits.sum(axis=0)
        d_pooled = dlogits @ self.weight.T
        per_pos = (mask / denom[:, None])[:, :, None] * d_pooled[:, None, :]
        np.add.at(g_emb, ids.reshape(-1), per_pos.reshape(-1, d))
        return grad


def reference_encoder(vocab: Sequence[str], dim: int, seed: int) -> ReferenceEncoder:
    return ReferenceEncoder(vocab, dim, seed)


def pad_batch(token_lists: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    width = max((len(t) for t in token_lists), default=0)
    width = max(width, 1)
    ids = np.full((len(token_lists), width), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(token_lists), width), dtype=np.float64)
    for i, toks in enumerate(token_lists):
        ids[i, : len(toks)] = toks
        mask[i, : len(toks)] = 1.0
    return ids, mask


@dataclass(frozen=True)
class WeightedBatch:
    ids: np.ndarray
    mask: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = len(self.targets)
        if not (self.ids.shape[0] == self.mask.shape[0] == len(self.weights) == n):
            raise ValueError("batch arrays disagree on example count")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")


def sample_weight(row: LabeledSentence, cfg: TrainConfig) -> float:
    return cfg.confidence_weight if row.solved_conflict is True else 1.0


def make_batch(rows: Sequence[LabeledSentence], encoder, cfg: TrainConfig,
               tokens: Optional[Sequence[Sequence[int]]] = None) -> WeightedBatch:
    if tokens is None:
        tokens = [encoder.tokenize(r.text) for r in rows]
    ids, mask = pad_batch(tokens)
    targets = np.array([int(to_sentiment(r.label)) for r in rows], dtype=np.int64)
    weights = np.array([sample_weight(r, cfg) for r in rows], dtype=np.float64)
    return WeightedBatch(ids, mask, targets, weights)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-example softmax cross-entropy."""
    logits = np.asarray(logits, dtype=np.float64)
    return -_log_softmax(logits)[np.arange(len(targets)), targets]


def weighted_loss_and_grad(logits: np.ndarray, targets: np.ndarray,
                           weights: np.ndarray) -> tuple[float, np.ndarray]:
    """Weighted-mean cross-entropy and its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    n = len(targets)
    if n == 0:
        raise ValueError("empty batch")
    if logits.shape != (n, 3) or len(weights) != n:
        raise ValueError("logits, targets and weights disagree on example count")
    logp = _log_softmax(logits)
    ce = -logp[np.arange(n), targets]
    total_w = weights.sum()
    loss = float(weights @ ce / total_w)
    grad = np.exp(logp)
    grad[np.arange(n), targets] -= 1.0
    grad *= (weights / total_w)[:, None]
    return loss, grad


def weighted_loss(logits: np.ndarray, batch: WeightedBatch) -> float:
    return weighted_loss_and_grad(logits, batch.targets, batch.weights)[0]


def loss_and_param_grad(encoder, batch: WeightedBatch) -> tuple[float, np.ndarray]:
    logits = encoder.forward(batch.ids, batch.mask)
    loss, dlogits = weighted_loss_and_grad(logits, batch.targets, batch.weights)
    return loss, encoder.backward(batch.ids, batch.mask, dlogits)


@dataclass
class TrainResult:
    encoder: object
    epoch_losses: list[float] = field(default_factory=list)
    step_losses: list[float] = field(default_factory=list)


def train(split: CorpusSplit, encoder, cfg: TrainConfig,
          optimizer: Optional[Optimizer] = None) -> TrainResult:
    """Mini-batch training; the input encoder is left untouched.

    Rows are reshuffled every epoch with a generator seeded by
    ``(cfg.seed, epoch)``, so the run is a pure function of data, config and
    the initial encoder.
    """
    rows = [r for r in split.rows if r.label is not None]
    if not rows:
        raise TrainingError("empty training split")
    model = encoder.copy()
    opt = optimizer if optimizer is not None else SGD(cfg.learning_rate)
    tokens = [model.tokenize(r.text) for r in rows]
    result = TrainResult(model)
    n = len(rows)
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        losses = []
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            batch = make_batch([rows[i] for i in idx], model, cfg, [tokens[i] for i in idx])
            loss, grad = loss_and_param_grad(model, batch)
            if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1}, batch {b + 1}")
            opt.step(model.params, grad)
            losses.append(loss)
        result.step_losses.extend(losses)
        result.epoch_losses.append(float(np.mean(losses)))
        logger.debug("epoch %d loss %.6f", epoch + 1, result.epoch_losses[-1])
    return result


def predict_logits(split: CorpusSplit, encoder, batch_size: int = 64) -> np.ndarray:
    out = []
    for start in range(0, len(split.rows), batch_size):
        chunk = split.rows[start : start + batch_size]
        ids, mask = pad_batch([encoder.tokenize(r.text) for r in chunk])
        out.append(encoder.forward(ids, mask))
    if not out:
        return np.zeros((0, 3))
    return np.concatenate(out)


def predict(split: CorpusSplit, encoder, batch_size: int = 64) -> list[tuple[str, SubjLabel]]:
    logits = predict_logits(split, encoder, batch_size)
    if not len(logits):
        return []
    return list(zip(split.ids, decode_batch(logits)))


def save_encoder(encoder: ReferenceEncoder, path) -> None:
    buf = io.BytesIO()
    np.savez(
        buf,
        version=np.array(CHECKPOINT_VERSION),
        params=encoder.params,
        vocab=np.array(encoder.vocab, dtype=str),
        dim=np.array(encoder.dim),
        seed=np.array(encoder.seed),
    )
    atomic_write_bytes(path, buf.getvalue())


def load_encoder(path) -> ReferenceEncoder:
    path = Path(path)
    if not path.exists():
        raise TrainingError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise TrainingError(f"unsupported checkpoint version {version}")
        return ReferenceEncoder(
            [str(t) for t in data["vocab"]],
            int(data["dim"]),
            int(data["seed"]),
            params=data["params"],
        )
