"""Contrastive training of a linear adapter over frozen base embeddings.

The adapter is a single matrix W applied as v -> normalize(W^T v). Two loss
configurations are supported:

* ``cosine-triplet``: hinge on the cosine margin,
  sum_i max(0, margin - cos(a_i, p_i) + cos(a_i, n_i)).

* ``aoe``: an angle-optimized objective with three temperature-scaled terms.
  Embeddings are read as complex vectors (first half real parts, second half
  imaginary parts). For a pair (x, y) of unit vectors the angle score is
  ``|cos(x, y) + skew(x, y)|`` where ``skew`` is the imaginary part of the
  complex inner product; the normalized complex division reduces to exactly
  these two sums for unit inputs. The loss combines, with equal weights:
  a ranking term over cosines (every positive pair should outscore every
  negative pair in the batch, temperature ``cosine_tau``), the same ranking
  over angle scores (temperature ``angle_tau``), and an in-batch-negative
  softmax term in which each anchor must pick its positive against all
  negatives in the batch (temperature ``ibn_tau``). With a single-triplet
  batch each term reduces to its pairwise logistic form.

Gradients are analytic and verified against central finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .constructs import Triplet
from .errors import GradCheckFailure, NumericalFault

COSINE_TRIPLET = "cosine-triplet"
AOE = "aoe"


@dataclass(frozen=True)
class LossConfig:
    kind: str = AOE
    margin: float = 0.2
    ibn_tau: float = 20.0
    angle_tau: float = 20.0
    cosine_tau: float = 20.0

    def __post_init__(self):
        if self.kind not in (COSINE_TRIPLET, AOE):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if min(self.ibn_tau, self.angle_tau, self.cosine_tau) <= 0:
            raise ValueError("temperatures must be positive")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    learning_rate: float = 1e-2
    epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class LinearAdapter:
    """Linear map with unit-norm outputs: v -> normalize(W^T v)."""

    weights: np.ndarray  # d_in x d_out

    @staticmethod
    def identity(dim: int) -> "LinearAdapter":
        return LinearAdapter(weights=np.eye(dim))

    @staticmethod
    def random(d_in: int, d_out: int, seed: int = 0) -> "LinearAdapter":
        rng = np.random.default_rng(seed)
        return LinearAdapter(weights=rng.normal(scale=d_in**-0.5, size=(d_in, d_out)))

    @property
    def d_in(self) -> int:
        return self.weights.shape[0]

    @property
    def d_out(self) -> int:
        return self.weights.shape[1]

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """Map row vectors through W and L2-normalize the result rows."""
        raw = np.atleast_2d(np.asarray(vectors, dtype=np.float64)) @ self.weights
        norms = np.linalg.norm(raw, axis=1)
        if np.any(norms == 0.0) or not np.all(np.isfinite(raw)):
            raise NumericalFault("adapter produced a zero or non-finite vector")
        out = raw / norms[:, None]
        return out[0] if np.asarray(vectors).ndim == 1 else out

    def save(self, path: str | Path) -> None:
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        header = struct.pack("<II", w.shape[0], w.shape[1])
        Path(path).write_bytes(header + w.astype("<f8").tobytes())

    @staticmethod
    def load(path: str | Path) -> "LinearAdapter":
        blob = Path(path).read_bytes()
        rows, cols = struct.unpack("<II", blob[:8])
        weights = np.frombuffer(blob[8:], dtype="<f8").reshape(rows, cols)
        return LinearAdapter(weights=weights.astype(np.float64))


def _rot(x: np.ndarray) -> np.ndarray:
    """Multiply the complex reading of row vectors by i: (re, im) -> (-im, re)."""
    half = x.shape[-1] // 2
    return np.concatenate([-x[..., half:], x[..., :half]], axis=-1)


def _normalize_rows(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms == 0.0):
        raise NumericalFault("zero vector after adapter")
    return raw / norms[:, None], norms


def _backprop_normalization(
    grad_unit: np.ndarray, unit: np.ndarray, norms: np.ndarray
) -> np.ndarray:
    inner = np.sum(grad_unit * unit, axis=1, keepdims=True)
    return (grad_unit - inner * unit) / norms[:, None]


def loss_and_grad(
    adapter: LinearAdapter,
    anchors: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    cfg: LossConfig,
) -> tuple[float, np.ndarray]:
    """Batch loss and its gradient with respect to the adapter weights.

    ``anchors``, ``positives`` and ``negatives`` are row-aligned base
    embedding matrices of one triplet per row.
    """
    W = adapter.weights
    A = np.atleast_2d(np.asarray(anchors, dtype=np.float64))
    P = np.atleast_2d(np.asarray(positives, dtype=np.float64))
    N = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    if not (A.shape == P.shape == N.shape):
        raise ValueError("anchor/positive/negative batches must align")
    if A.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if cfg.kind == AOE and W.shape[1] % 2 != 0:
        raise ValueError("aoe loss needs an even output dimension")

    UA, UP, UN = A @ W, P @ W, N @ W
    a_hat, a_norm = _normalize_rows(UA)
    p_hat, p_norm = _normalize_rows(UP)
    n_hat, n_norm = _normalize_rows(UN)

    grad_a = np.zeros_like(a_hat)
    grad_p = np.zeros_like(p_hat)
    grad_n = np.zeros_like(n_hat)

    cos_pos = np.sum(a_hat * p_hat, axis=1)
    cos_neg = np.sum(a_hat * n_hat, axis=1)

    if cfg.kind == COSINE_TRIPLET:
        hinge = cfg.margin - cos_pos + cos_neg
        active = hinge > 0
        loss = float(np.sum(hinge[active]))
        d_pos = np.where(active, -1.0, 0.0)
        d_neg = np.where(active, 1.0, 0.0)
        grad_a += d_pos[:, None] * p_hat + d_neg[:, None] * n_hat
        grad_p += d_pos[:, None] * a_hat
        grad_n += d_neg[:, None] * a_hat
    else:
        loss = 0.0

        # Ranking over cosines: every positive pair above every negative pair.
        loss += _ranking_term(
            cos_pos, cos_neg, cfg.cosine_tau, grad_a, grad_p, grad_n, a_hat, p_hat, n_hat,
            angle=False,
        )
        # Ranking over angle scores |cos + skew|.
        loss += _ranking_term(
            cos_pos, cos_neg, cfg.angle_tau, grad_a, grad_p, grad_n, a_hat, p_hat, n_hat,
            angle=True,
        )
        # In-batch negatives: each anchor picks its positive among all negatives.
        loss += _ibn_term(cfg.ibn_tau, cos_pos, grad_a, grad_p, grad_n, a_hat, p_hat, n_hat)

    grad_ua = _backprop_normalization(grad_a, a_hat, a_norm)
    grad_up = _backprop_normalization(grad_p, p_hat, p_norm)
    grad_un = _backprop_normalization(grad_n, n_hat, n_norm)
    grad_w = A.T @ grad_ua + P.T @ grad_up + N.T @ grad_un

    if not np.isfinite(loss) or not np.all(np.isfinite(grad_w)):
        raise NumericalFault("non-finite loss or gradient", batch_index=0)
    return loss, grad_w


def _ranking_term(cos_pos, cos_neg, tau, grad_a, grad_p, grad_n, a_hat, p_hat, n_hat, angle):
    """log(1 + sum_{i,j} exp(score_neg_j - score_pos_i)) and its gradient.

    For ``angle=True`` the score of a pair is tau * |cos + skew|; otherwise
    it is tau * cos. The double sum factorizes, so weights come from two
    stable log-sum-exps.
    """
    if angle:
        skew_pos = np.sum(a_hat * _rot(p_hat), axis=1)
        skew_neg = np.sum(a_hat * _rot(n_hat), axis=1)
        s_pos = cos_pos + skew_pos
        s_neg = cos_neg + skew_neg
        score_pos = tau * np.abs(s_pos)
        score_neg = tau * np.abs(s_neg)
    else:
        score_pos = tau * cos_pos
        score_neg = tau * cos_neg

    log_en = _logsumexp(score_neg)
    log_ep = _logsumexp(-score_pos)
    total = log_en + log_ep
    loss = float(np.logaddexp(0.0, total))
    # d loss / d score_pos_i = -exp(-score_pos_i + log_en - loss_denom)
    log_denom = np.logaddexp(0.0, total)
    w_pos = -np.exp(-score_pos + log_en - log_denom)
    w_neg = np.exp(score_neg + log_ep - log_denom)

    if angle:
        d_pos = tau * np.sign(s_pos) * w_pos
        d_neg = tau * np.sign(s_neg) * w_neg
        grad_a += d_pos[:, None] * (p_hat + _rot(p_hat))
        grad_p += d_pos[:, None] * (a_hat - _rot(a_hat))
        grad_a += d_neg[:, None] * (n_hat + _rot(n_hat))
        grad_n += d_neg[:, None] * (a_hat - _rot(a_hat))
    else:
        grad_a += (tau * w_pos)[:, None] * p_hat
        grad_p += (tau * w_pos)[:, None] * a_hat
        grad_a += (tau * w_neg)[:, None] * n_hat
        grad_n += (tau * w_neg)[:, None] * a_hat
    return loss


def _ibn_term(tau, cos_pos, grad_a, grad_p, grad_n, a_hat, p_hat, n_hat):
    m = a_hat.shape[0]
    cos_all_neg = a_hat @ n_hat.T  # anchor i vs negative j
    logits = np.hstack([(tau * cos_pos)[:, None], tau * cos_all_neg])  # m x (1+m)
    log_z = _logsumexp(logits, axis=1)
    loss = float(np.mean(log_z - logits[:, 0]))
    softmax = np.exp(logits - log_z[:, None])

    d_cos_pos = tau * (softmax[:, 0] - 1.0) / m
    d_cos_neg = tau * softmax[:, 1:] / m  # m x m
    grad_a += d_cos_pos[:, None] * p_hat + d_cos_neg @ n_hat
    grad_p += d_cos_pos[:, None] * a_hat
    grad_n += d_cos_neg.T @ a_hat
    return loss


def _logsumexp(values: np.ndarray, axis=None):
    if axis is None:
        peak = float(np.max(values))
        return peak + float(np.log(np.sum(np.exp(values - peak))))
    peak = np.max(values, axis=axis, keepdims=True)
    out = peak + np.log(np.sum(np.exp(values - peak), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


@dataclass(frozen=True)
class TrainResult:
    adapter: LinearAdapter
    history: tuple[tuple[int, float], ...]  # (step, loss)


def train(
    adapter: LinearAdapter,
    triplets: Sequence[Triplet],
    base_embeddings: dict[str, np.ndarray],
    train_cfg: TrainConfig,
    loss_cfg: LossConfig,
) -> TrainResult:
    """Plain SGD over triplet batches; deterministic for a given seed.

    The triplet order is shuffled once from the seed and reused for every
    epoch, so with a zero learning rate the per-batch loss history repeats
    exactly across epochs.
    """
    if not triplets:
        raise ValueError("no triplets to train on")
    try:
        A = np.vstack([base_embeddings[t.anchor] for t in triplets])
        P = np.vstack([base_embeddings[t.positive] for t in triplets])
        N = np.vstack([base_embeddings[t.negative] for t in triplets])
    except KeyError as exc:
        raise NumericalFault(f"no base embedding for indicator {exc.args[0]!r}") from exc

    rng = np.random.default_rng(train_cfg.seed)
    order = rng.permutation(len(triplets))
    W = adapter.weights.copy()
    history: list[tuple[int, float]] = []
    step = 0
    for _ in range(train_cfg.epochs):
        for start in range(0, len(order), train_cfg.batch_size):
            batch = order[start : start + train_cfg.batch_size]
            try:
                loss, grad = loss_and_grad(
                    LinearAdapter(W), A[batch], P[batch], N[batch], loss_cfg
                )
            except NumericalFault as exc:
                exc.history = tuple(history)
                raise
            W -= train_cfg.learning_rate * grad
            history.append((step, loss))
            step += 1
    return TrainResult(adapter=LinearAdapter(W), history=tuple(history))


@dataclass(frozen=True)
class GradCheckReport:
    trials: int
    worst_relative_error: float
    worst_seed: int


def grad_check(
    loss_cfg: LossConfig,
    trials: int = 50,
    seed: int = 0,
    _corrupt: float = 0.0,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Each trial draws a random small adapter and batch. ``_corrupt`` is a test
    hook that biases the analytic gradient so the failure path can be
    exercised. Raises GradCheckFailure (with the offending trial seed) if any
    trial exceeds 1e-4 relative error.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    worst = 0.0
    worst_seed = seed
    for trial in range(trials):
        trial_seed = seed + trial
        rng = np.random.default_rng(trial_seed)
        d_in = int(rng.integers(4, 9))
        d_out = int(rng.integers(2, 4)) * 2  # even, for the complex reading
        m = int(rng.integers(1, 5))
        adapter = LinearAdapter(rng.normal(size=(d_in, d_out)))
        A = rng.normal(size=(m, d_in))
        P = rng.normal(size=(m, d_in))
        N = rng.normal(size=(m, d_in))

        _, grad = loss_and_grad(adapter, A, P, N, loss_cfg)
        grad = grad + _corrupt

        fd = np.zeros_like(grad)
        h = 1e-6
        for i in range(d_in):
            for j in range(d_out):
                w_plus = adapter.weights.copy()
                w_plus[i, j] += h
                w_minus = adapter.weights.copy()
                w_minus[i, j] -= h
                lp, _ = loss_and_grad(LinearAdapter(w_plus), A, P, N, loss_cfg)
                lm, _ = loss_and_grad(LinearAdapter(w_minus), A, P, N, loss_cfg)
                fd[i, j] = (lp - lm) / (2 * h)

        denom = np.maximum(np.abs(grad) + np.abs(fd), 1e-6)
        relative = float(np.max(np.abs(grad - fd) / denom))
        if relative > worst:
            worst = relative
            worst_seed = trial_seed
        if relative > 1e-4:
            raise GradCheckFailure(
                f"relative error {relative:.2e} exceeds 1e-4", seed=trial_seed
            )
    return GradCheckReport(trials=trials, worst_relative_error=worst, worst_seed=worst_seed)


def separation(embeddings: np.ndarray, groups: Sequence[int]) -> float:
    """Mean in-group cosine minus mean out-group cosine over all pairs."""
    unit = embeddings / np.linalg.norm(embeddings, axis=1, keepdims=True)
    sims = unit @ unit.T
    groups = np.asarray(groups)
    same = groups[:, None] == groups[None, :]
    off_diag = ~np.eye(len(groups), dtype=bool)
    in_group = sims[same & off_diag]
    out_group = sims[~same]
    return float(in_group.mean() - out_group.mean())


def history_csv(history: Sequence[tuple[int, float]]) -> str:
    lines = ["step,loss"]
    lines.extend(f"{step},{loss:.6f}" for step, loss in history)
    return "\n".join(lines) + "\n"
