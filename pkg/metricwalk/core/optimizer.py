"""
metricwalk Optimizer

Fits embeddings to co-occurrence counts.

Losses:
- neg_binomial: metric regression. C_ij ~ NB(lambda_ij, theta) with
  log lambda_ij = -||x_i - c_j||^2 / 2 + a_i + b_j
- glove: the weighted least-squares objective in distance form,
  sum f(C_ij) (-log C_ij - ||x_i - c_j||^2 + a_i + b_j)^2
- softmax: exact distance softmax over all contexts (desk scale only)

The pair losses are trained by minibatch SGD over shuffled pairs with a
line-searched initial step decayed linearly to zero across epochs. The
softmax loss is trained by full-batch gradient descent with backtracking.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln, logsumexp

from .schemas import DEFAULT_THETA, CooccurrenceCounts, EmbeddingModel, MetricWalkError

logger = logging.getLogger("metricwalk.optimizer")

CountsLike = Union[CooccurrenceCounts, sp.spmatrix, np.ndarray]

# log-rate ceiling applied before exponentiation
LOG_RATE_CAP = 30.0

DEFAULT_SOFTMAX_CAP = 5000

# dense pair enumeration is used by nb_loglik up to this many words
_DENSE_PAIRS_LIMIT = 2000

_SOFTMAX_BLOCK = 1024

# a diverged epoch is replayed from its snapshot at half the step, this many times at most
MAX_STEP_HALVINGS = 8


class DivergenceError(MetricWalkError):
    """The objective or the parameters became non-finite during training."""

    def __init__(self, epoch: int, step: int, detail: str = ""):
        self.epoch = epoch
        self.step = step
        msg = f"training diverged at epoch {epoch}, step {step}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class SoftmaxTooLargeError(MetricWalkError):
    """The vocabulary is too large for the exact softmax loss."""
    pass


# =============================================================================
# Configuration
# =============================================================================

class LossKind(Enum):
    NEG_BINOMIAL = "nb"
    GLOVE = "glove"
    SOFTMAX = "softmax"


@dataclass
class TrainConfig:
    """Training settings; defaults follow the large-corpus runs."""
    epochs: int = 10
    initial_step: float = 10.0
    line_search: bool = True
    skip_threshold: float = 10.0
    seed: int = 0
    loss: LossKind = LossKind.NEG_BINOMIAL
    theta: float = DEFAULT_THETA
    x_max: float = 10.0
    exponent: float = 0.75
    zero_ratio: float = 1.0
    batch_size: int = 256
    workers: int = 1
    softmax_cap: int = DEFAULT_SOFTMAX_CAP

    def validate(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.initial_step > 0:
            raise ValueError(f"initial_step must be > 0, got {self.initial_step}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if self.skip_threshold < 0 or self.zero_ratio < 0:
            raise ValueError("skip_threshold and zero_ratio must be >= 0")
        if self.batch_size < 1 or self.workers < 1:
            raise ValueError("batch_size and workers must be >= 1")
        if not (self.x_max > 0 and self.exponent > 0):
            raise ValueError("x_max and exponent must be > 0")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epochs": self.epochs,
            "initial_step": self.initial_step,
            "line_search": self.line_search,
            "skip_threshold": self.skip_threshold,
            "seed": self.seed,
            "loss": self.loss.value,
            "theta": self.theta,
            "x_max": self.x_max,
            "exponent": self.exponent,
            "zero_ratio": self.zero_ratio,
            "batch_size": self.batch_size,
            "workers": self.workers,
            "softmax_cap": self.softmax_cap,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        data = dict(data)
        if "loss" in data and not isinstance(data["loss"], LossKind):
            data["loss"] = LossKind(data["loss"])
        return cls(**data)


# =============================================================================
# Pairs
# =============================================================================

def full_matrix(counts: CountsLike) -> sp.csr_matrix:
    """Full n x n count matrix from any supported counts representation."""
    if isinstance(counts, CooccurrenceCounts):
        m = counts.matrix
    else:
        m = sp.csr_matrix(counts, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"count matrix must be square, got {m.shape}")
    if m.nnz and m.data.min() < 0:
        raise ValueError("counts must be non-negative")
    m = sp.csr_matrix(m, dtype=np.float64)
    m.eliminate_zeros()
    m.sort_indices()
    return m


@dataclass(frozen=True)
class PairBatch:
    """Parallel arrays of (row, col, count) training pairs."""
    rows: np.ndarray
    cols: np.ndarray
    counts: np.ndarray
    n: int

    def __len__(self) -> int:
        return int(self.rows.size)

    def take(self, idx: np.ndarray) -> "PairBatch":
        return PairBatch(self.rows[idx], self.cols[idx], self.counts[idx], self.n)

    @property
    def num_zero(self) -> int:
        return int(np.count_nonzero(self.counts == 0))

    @classmethod
    def all_pairs(cls, counts: CountsLike) -> "PairBatch":
        """Every (i, j) pair, zeros included."""
        m = full_matrix(counts)
        n = m.shape[0]
        rows, cols = np.divmod(np.arange(n * n, dtype=np.int64), n)
        return cls(rows, cols, np.asarray(m.toarray()).ravel(), n)

    @classmethod
    def from_counts(cls, counts: CountsLike, zero_ratio: float = 0.0, seed: int = 0) -> "PairBatch":
        """Stored nonzero pairs plus `zero_ratio` uniformly sampled zero pairs per nonzero."""
        m = full_matrix(counts)
        n = m.shape[0]
        coo = m.tocoo()
        rows = coo.row.astype(np.int64)
        cols = coo.col.astype(np.int64)
        vals = coo.data.astype(np.float64)
        wanted = int(round(zero_ratio * rows.size))
        zeros = _sample_zero_pairs(rows * n + cols, n, wanted, np.random.default_rng(seed))
        if zeros.size:
            zr, zc = np.divmod(zeros, n)
            rows = np.concatenate([rows, zr])
            cols = np.concatenate([cols, zc])
            vals = np.concatenate([vals, np.zeros(zeros.size)])
        return cls(rows, cols, vals, n)


def _sample_zero_pairs(stored: np.ndarray, n: int, wanted: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct linear ids of unstored cells, sorted."""
    free = n * n - stored.size
    wanted = min(wanted, free)
    if wanted <= 0:
        return np.empty(0, dtype=np.int64)
    stored = np.sort(stored)
    if free <= 4 * wanted:
        mask = np.ones(n * n, dtype=bool)
        mask[stored] = False
        pool = np.flatnonzero(mask)
        return np.sort(rng.choice(pool, size=wanted, replace=False))
    picked = np.empty(0, dtype=np.int64)
    while picked.size < wanted:
        draw = rng.integers(0, n * n, size=2 * (wanted - picked.size) + 16)
        draw = draw[~np.isin(draw, stored, assume_unique=False)]
        picked = np.unique(np.concatenate([picked, draw]))
    return np.sort(rng.permutation(picked)[:wanted])


# =============================================================================
# Negative binomial metric regression
# =============================================================================

@dataclass
class Gradients:
    """Gradients w.r.t. every model parameter, in the model's shapes."""
    word_vecs: np.ndarray
    ctx_vecs: np.ndarray
    row_bias: np.ndarray
    col_bias: np.ndarray
    clamped: int = 0

    @classmethod
    def zeros_like(cls, model: EmbeddingModel) -> "Gradients":
        return cls(
            np.zeros_like(model.word_vecs), np.zeros_like(model.ctx_vecs),
            np.zeros_like(model.row_bias), np.zeros_like(model.col_bias),
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([
            self.word_vecs.ravel(), self.ctx_vecs.ravel(),
            self.row_bias.ravel(), self.col_bias.ravel(),
        ])


def _log_rate(model: EmbeddingModel, batch: PairBatch) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x_i - c_j, clamped log rate, clamp mask) per pair."""
    diff = model.word_vecs[batch.rows] - model.ctx_vecs[batch.cols]
    log_lam = -0.5 * np.einsum("ij,ij->i", diff, diff) + model.row_bias[batch.rows] + model.col_bias[batch.cols]
    clamped = log_lam > LOG_RATE_CAP
    return diff, np.minimum(log_lam, LOG_RATE_CAP), clamped


def nb_pair_loglik(counts: np.ndarray, log_lam: np.ndarray, theta: float) -> np.ndarray:
    """Per-pair negative binomial log-likelihood with rate exp(log_lam)."""
    counts = np.asarray(counts, dtype=np.float64)
    log_lam = np.asarray(log_lam, dtype=np.float64)
    log_theta = math.log(theta)
    log_sum = np.logaddexp(log_lam, log_theta)  # log(lambda + theta)
    return (
        theta * log_theta
        - theta * log_sum
        + counts * (log_lam - log_sum)
        + gammaln(counts + theta)
        - gammaln(theta)
        - gammaln(counts + 1.0)
    )


def _default_pairs(counts: CountsLike) -> PairBatch:
    m = full_matrix(counts)
    if m.shape[0] <= _DENSE_PAIRS_LIMIT:
        return PairBatch.all_pairs(m)
    return PairBatch.from_counts(m, zero_ratio=1.0, seed=0)


def nb_loglik(counts: CountsLike, model: EmbeddingModel, pairs: Optional[PairBatch] = None) -> float:
    """
    Negative binomial log-likelihood of the counts under the model.

    Sums over `pairs` when given, otherwise over all n^2 pairs (or, for large
    vocabularies, the stored pairs plus an equal number of sampled zeros).
    """
    batch = pairs if pairs is not None else _default_pairs(counts)
    _, log_lam, clamped = _log_rate(model, batch)
    if clamped.any():
        logger.warning("log-rate clamped at %g for %d pairs", LOG_RATE_CAP, int(clamped.sum()))
    return float(nb_pair_loglik(batch.counts, log_lam, model.theta).sum())


def _nb_deltas(batch: PairBatch, model: EmbeddingModel) -> Tuple[np.ndarray, np.ndarray, int]:
    diff, log_lam, clamped = _log_rate(model, batch)
    lam = np.exp(log_lam)
    theta = model.theta
    delta = theta * (batch.counts - lam) / (lam + theta)
    delta[clamped] = 0.0
    return diff, delta, int(clamped.sum())


def nb_gradients(batch: PairBatch, model: EmbeddingModel) -> Gradients:
    """
    Gradient of the log-likelihood over `batch` (ascent direction).

    With delta_ij = theta (C_ij - lambda_ij) / (lambda_ij + theta):
    dx_i = sum_j (c_j - x_i) delta_ij, dc_j = sum_i (x_i - c_j) delta_ij,
    da_i = sum_j delta_ij, db_j = sum_i delta_ij. Clamped pairs contribute 0.
    """
    diff, delta, clamped = _nb_deltas(batch, model)
    grads = Gradients.zeros_like(model)
    weighted = diff * delta[:, None]
    np.add.at(grads.word_vecs, batch.rows, -weighted)
    np.add.at(grads.ctx_vecs, batch.cols, weighted)
    np.add.at(grads.row_bias, batch.rows, delta)
    np.add.at(grads.col_bias, batch.cols, delta)
    grads.clamped = clamped
    return grads


def nb_taylor_weight(count: float, theta: float) -> float:
    """Curvature weight C theta / (2 (C + theta)) of the log-likelihood in log lambda at lambda = C."""
    return count * theta / (2.0 * (count + theta))


# =============================================================================
# GloVe (distance form)
# =============================================================================

def glove_weight(count, x_max: float = 10.0, exponent: float = 0.75):
    """f(C) = min(C, x_max)^exponent."""
    return np.minimum(count, x_max) ** exponent


def _glove_terms(batch: PairBatch, model: EmbeddingModel, x_max: float, exponent: float):
    if np.any(batch.counts <= 0):
        raise ValueError("glove loss is defined on positive counts only")
    diff = model.word_vecs[batch.rows] - model.ctx_vecs[batch.cols]
    resid = (
        -np.log(batch.counts)
        - np.einsum("ij,ij->i", diff, diff)
        + model.row_bias[batch.rows]
        + model.col_bias[batch.cols]
    )
    weight = glove_weight(batch.counts, x_max, exponent)
    return diff, resid, weight


def glove_loss_grad(
    batch: PairBatch,
    model: EmbeddingModel,
    x_max: float = 10.0,
    exponent: float = 0.75,
) -> Tuple[float, Gradients]:
    """Weighted squared residual loss and its gradient (descent direction)."""
    diff, resid, weight = _glove_terms(batch, model, x_max, exponent)
    loss = float(np.sum(weight * resid ** 2))
    fr = weight * resid
    grads = Gradients.zeros_like(model)
    np.add.at(grads.word_vecs, batch.rows, -4.0 * fr[:, None] * diff)
    np.add.at(grads.ctx_vecs, batch.cols, 4.0 * fr[:, None] * diff)
    np.add.at(grads.row_bias, batch.rows, 2.0 * fr)
    np.add.at(grads.col_bias, batch.cols, 2.0 * fr)
    return loss, grads


# =============================================================================
# Distance softmax
# =============================================================================

def _dense_counts(counts: CountsLike, cap: int) -> np.ndarray:
    m = full_matrix(counts)
    n = m.shape[0]
    if n > cap:
        raise SoftmaxTooLargeError(
            f"exact softmax over n={n} contexts exceeds the cap of {cap}; "
            f"use the neg_binomial or glove loss instead"
        )
    return np.asarray(m.toarray())


def _softmax_logits(model: EmbeddingModel, lo: int, hi: int) -> np.ndarray:
    X = model.word_vecs[lo:hi]
    Cv = model.ctx_vecs
    sq = (
        np.sum(X ** 2, axis=1)[:, None]
        + np.sum(Cv ** 2, axis=1)[None, :]
        - 2.0 * X @ Cv.T
    )
    return -sq + model.col_bias[None, :]


def softmax_probabilities(model: EmbeddingModel) -> np.ndarray:
    """Predicted conditionals q_ij, dense n x n."""
    s = _softmax_logits(model, 0, model.n)
    return np.exp(s - logsumexp(s, axis=1, keepdims=True))


def softmax_loss_grad(
    counts: CountsLike,
    model: EmbeddingModel,
    cap: int = DEFAULT_SOFTMAX_CAP,
) -> Tuple[float, Gradients]:
    """
    Negative log-likelihood -sum C_ij log q_ij of the exact distance softmax
    q_ij ~ exp(-||x_i - c_j||^2 + b_j), and its gradient (descent direction).

    The row bias does not enter the softmax and gets a zero gradient.
    """
    C = _dense_counts(counts, cap)
    n = C.shape[0]
    if model.n != n:
        raise ValueError(f"model has {model.n} rows, counts have {n}")
    loss = 0.0
    grads = Gradients.zeros_like(model)
    col_g = np.zeros(n)
    for lo in range(0, n, _SOFTMAX_BLOCK):
        hi = min(lo + _SOFTMAX_BLOCK, n)
        s = _softmax_logits(model, lo, hi)
        log_q = s - logsumexp(s, axis=1, keepdims=True)
        Cb = C[lo:hi]
        loss -= float(np.sum(Cb * log_q))
        G = Cb.sum(axis=1, keepdims=True) * np.exp(log_q) - Cb
        grads.word_vecs[lo:hi] = 2.0 * G @ model.ctx_vecs
        grads.ctx_vecs += 2.0 * G.T @ model.word_vecs[lo:hi]
        col_g += G.sum(axis=0)
    grads.ctx_vecs -= 2.0 * model.ctx_vecs * col_g[:, None]
    grads.col_bias = col_g
    return loss, grads


def softmax_entropy_bound(counts: CountsLike) -> float:
    """Lower bound -sum C_ij log(C_ij / sum_k C_ik) of the softmax loss."""
    m = full_matrix(counts)
    row_sums = np.asarray(m.sum(axis=1)).ravel()
    coo = m.tocoo()
    return float(-np.sum(coo.data * np.log(coo.data / row_sums[coo.row])))


# =============================================================================
# Training
# =============================================================================

@dataclass
class FitResult:
    model: EmbeddingModel
    history: List[float] = field(default_factory=list)
    initial_step: float = 0.0
    clamps: int = 0
    pairs: int = 0
    initial_objective: float = math.nan
    step_halvings: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "initial_objective": self.initial_objective,
            "history": list(self.history),
            "initial_step": self.initial_step,
            "clamps": self.clamps,
            "pairs": self.pairs,
            "step_halvings": self.step_halvings,
        }


def init_model(n: int, d: int, theta: float, rng: np.random.Generator) -> EmbeddingModel:
    """Entries i.i.d. uniform in [-0.5/d, 0.5/d]."""
    half = 0.5 / d
    return EmbeddingModel(
        word_vecs=rng.uniform(-half, half, size=(n, d)),
        ctx_vecs=rng.uniform(-half, half, size=(n, d)),
        row_bias=rng.uniform(-half, half, size=n),
        col_bias=rng.uniform(-half, half, size=n),
        theta=theta,
    )


class _PairTrainer:
    """Minibatch SGD for the pair losses."""

    def __init__(self, pairs: PairBatch, config: TrainConfig):
        self.pairs = pairs
        self.config = config
        self.clamps = 0

    def objective(self, model: EmbeddingModel) -> float:
        """Minimized quantity over all training pairs."""
        if self.config.loss is LossKind.NEG_BINOMIAL:
            _, log_lam, _ = _log_rate(model, self.pairs)
            return -float(nb_pair_loglik(self.pairs.counts, log_lam, model.theta).sum())
        _, resid, weight = _glove_terms(self.pairs, model, self.config.x_max, self.config.exponent)
        return float(np.sum(weight * resid ** 2))

    def step(self, model: EmbeddingModel, idx: np.ndarray, eta: float):
        batch = self.pairs.take(idx)
        if self.config.loss is LossKind.NEG_BINOMIAL:
            diff, delta, clamped = _nb_deltas(batch, model)
            self.clamps += clamped
            move = eta * delta
            np.add.at(model.word_vecs, batch.rows, -move[:, None] * diff)
            np.add.at(model.ctx_vecs, batch.cols, move[:, None] * diff)
            np.add.at(model.row_bias, batch.rows, move)
            np.add.at(model.col_bias, batch.cols, move)
        else:
            diff, resid, weight = _glove_terms(batch, model, self.config.x_max, self.config.exponent)
            fr = eta * weight * resid
            np.add.at(model.word_vecs, batch.rows, 4.0 * fr[:, None] * diff)
            np.add.at(model.ctx_vecs, batch.cols, -4.0 * fr[:, None] * diff)
            np.add.at(model.row_bias, batch.rows, -2.0 * fr)
            np.add.at(model.col_bias, batch.cols, -2.0 * fr)
        return batch

    def epoch_order(self, rng: np.random.Generator) -> np.ndarray:
        """Shuffled pair indices after the frequency skip rule."""
        order = rng.permutation(len(self.pairs))
        threshold = self.config.skip_threshold
        if threshold > 0:
            c = self.pairs.counts[order]
            keep_p = np.where(c > 0, np.minimum(1.0, c / threshold), 1.0)
            order = order[rng.random(order.size) < keep_p]
        return order

    def run_pass(self, model: EmbeddingModel, order: np.ndarray, eta: float, epoch: int = 0):
        bs = self.config.batch_size
        for step, lo in enumerate(range(0, order.size, bs)):
            batch = self.step(model, order[lo:lo + bs], eta)
            touched_ok = (
                np.all(np.isfinite(model.word_vecs[batch.rows]))
                and np.all(np.isfinite(model.ctx_vecs[batch.cols]))
                and np.all(np.isfinite(model.row_bias[batch.rows]))
                and np.all(np.isfinite(model.col_bias[batch.cols]))
            )
            if not touched_ok:
                raise DivergenceError(epoch, step, f"non-finite parameters at step size {eta:g}")

    def run_pass_parallel(self, model: EmbeddingModel, order: np.ndarray, eta: float, epoch: int):
        shards = np.array_split(order, self.config.workers)
        with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
            futures = [executor.submit(self.run_pass, model, shard, eta, epoch) for shard in shards]
            for future in futures:
                future.result()


def _golden_section(f: Callable[[float], float], lo: float, hi: float, iters: int = 12) -> float:
    """Minimize f over [lo, hi] in log space."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(math.exp(d))
    return math.exp(c) if fc <= fd else math.exp(d)


def _line_search(trainer: _PairTrainer, model: EmbeddingModel, rng: np.random.Generator) -> float:
    """
    Pick the initial step: scan down from `initial_step` by decades for the
    best objective after one mini-epoch, then refine by golden section.
    """
    config = trainer.config
    order = trainer.epoch_order(rng)
    mini = order[: max(1, min(order.size, max(1000, order.size // 10)))]
    baseline = trainer.objective(model)
    clamps_before = trainer.clamps

    def after_mini_epoch(eta: float) -> float:
        trial = model.copy()
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                trainer.run_pass(trial, mini, eta)
                value = trainer.objective(trial)
        except DivergenceError:
            return math.inf
        return value if math.isfinite(value) else math.inf

    eta = config.initial_step
    values: List[Tuple[float, float]] = []
    for _ in range(40):
        values.append((eta, after_mini_epoch(eta)))
        if len(values) >= 2 and math.isfinite(values[-2][1]) and values[-1][1] > values[-2][1]:
            break
        eta /= 10.0
    trainer.clamps = clamps_before

    best = min(range(len(values)), key=lambda k: values[k][1])
    best_eta, best_val = values[best]
    if not best_val < baseline:
        raise DivergenceError(0, 0, "line search found no step that improves the objective")
    lo, hi = best_eta / 10.0, min(best_eta * 10.0, config.initial_step)
    if hi <= lo:
        return best_eta
    eta = _golden_section(after_mini_epoch, lo, hi)
    trainer.clamps = clamps_before
    if after_mini_epoch(eta) > best_val:
        eta = best_eta
    trainer.clamps = clamps_before
    logger.info("line search: initial step %.4g", eta)
    return eta


def _fit_softmax(counts: CountsLike, d: int, config: TrainConfig, rng: np.random.Generator) -> FitResult:
    C = _dense_counts(counts, config.softmax_cap)
    n = C.shape[0]
    model = init_model(n, d, config.theta, rng)
    model.row_bias[:] = 0.0
    total = max(float(C.sum()), 1.0)
    loss, grads = softmax_loss_grad(C, model, config.softmax_cap)
    start = loss
    eta = config.initial_step / total
    history: List[float] = []
    for epoch in range(config.epochs):
        g = grads.flat()
        gnorm2 = float(g @ g)
        if gnorm2 == 0.0:
            history.append(loss)
            continue
        for _ in range(60):
            trial = model.copy()
            trial.word_vecs -= eta * grads.word_vecs
            trial.ctx_vecs -= eta * grads.ctx_vecs
            trial.col_bias -= eta * grads.col_bias
            new_loss, new_grads = softmax_loss_grad(C, trial, config.softmax_cap)
            if math.isfinite(new_loss) and new_loss <= loss - 1e-4 * eta * gnorm2:
                break
            eta /= 2.0
        else:
            logger.info("softmax: no decrease at epoch %d, stopping", epoch)
            history.append(loss)
            break
        model, loss, grads = trial, new_loss, new_grads
        if not model.is_finite():
            raise DivergenceError(epoch, 0, "non-finite softmax parameters")
        history.append(loss)
        eta *= 2.0
    return FitResult(
        model=model, history=history, initial_step=config.initial_step / total,
        pairs=int(np.count_nonzero(C)), initial_objective=start,
    )


def train(counts: CountsLike, d: int, config: Optional[TrainConfig] = None) -> FitResult:
    """
    Fit an embedding and return it with its training record.

    Deterministic for a fixed seed when `workers == 1`.
    """
    config = config or TrainConfig()
    config.validate()
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    rng = np.random.default_rng(config.seed)
    if config.loss is LossKind.SOFTMAX:
        return _fit_softmax(counts, d, config, rng)

    m = full_matrix(counts)
    if m.nnz == 0:
        raise ValueError("counts are empty")
    zero_ratio = config.zero_ratio if config.loss is LossKind.NEG_BINOMIAL else 0.0
    pair_seed = int(rng.integers(0, 2**63 - 1))
    pairs = PairBatch.from_counts(m, zero_ratio=zero_ratio, seed=pair_seed)
    model = init_model(m.shape[0], d, config.theta, rng)
    trainer = _PairTrainer(pairs, config)
    start = trainer.objective(model)

    eta0 = _line_search(trainer, model, rng) if config.line_search else config.initial_step
    if config.workers > 1:
        logger.warning("training with %d workers: results are not deterministic", config.workers)

    history: List[float] = []
    previous = start
    scale = 1.0
    halvings = 0
    epoch = 0
    while epoch < config.epochs:
        eta = scale * eta0 * (1.0 - epoch / config.epochs)
        order = trainer.epoch_order(rng)
        snapshot, clamps_before = model.copy(), trainer.clamps
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                if config.workers > 1:
                    trainer.run_pass_parallel(model, order, eta, epoch)
                else:
                    trainer.run_pass(model, order, eta, epoch)
                value = trainer.objective(model)
            last_step = max(0, -(-order.size // config.batch_size) - 1)
            if not math.isfinite(value):
                raise DivergenceError(epoch, last_step, "objective is not finite")
            if value > previous + 10.0 * (abs(previous) + 1.0):
                raise DivergenceError(epoch, last_step, f"objective jumped from {previous:.4g} to {value:.4g}")
        except DivergenceError as e:
            if halvings >= MAX_STEP_HALVINGS:
                raise
            halvings += 1
            scale /= 2.0
            model, trainer.clamps = snapshot, clamps_before
            logger.warning("%s; replaying epoch %d at step %.4g", e, epoch + 1, eta / 2.0)
            continue
        history.append(value)
        previous = value
        logger.info("epoch %d/%d: objective %.6g (step %.4g)", epoch + 1, config.epochs, value, eta)
        epoch += 1

    if trainer.clamps:
        logger.warning("log-rate clamped %d times during training", trainer.clamps)
    return FitResult(
        model=model, history=history, initial_step=eta0,
        clamps=trainer.clamps, pairs=len(pairs), initial_objective=start,
        step_halvings=halvings,
    )


def fit(counts: CountsLike, d: int, config: Optional[TrainConfig] = None) -> EmbeddingModel:
    """Fit an embedding to the counts under the configured loss."""
    return train(counts, d, config).model
