"""
metricwalk Generators

Markov processes over a latent point cloud and their exact oracles:

- the Gaussian sentence walk: P_ij = exp(-||x_i - x_j||^2 / sigma^2) / Z_i
- its stationary distribution (pi_i proportional to Z_i by detailed balance)
- the latent topic walk: a Langevin-style process Y_t over R^d that emits
  words with probability proportional to alpha_i exp(-||x_i - Y_t||^2 / sigma_bar^2)

All samplers take an integer seed and are byte-identical across runs.
Graph walks live in `metricwalk.core.graphs`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .schemas import MetricWalkError, PointCloud

logger = logging.getLogger("metricwalk.generators")


class NonFiniteInputError(MetricWalkError):
    """Coordinates or parameters contain NaN or infinity."""
    pass


class NotStochasticError(MetricWalkError):
    """A matrix that should be row-stochastic is not."""
    pass


class ReducibleChainError(MetricWalkError):
    """The chain has more than one closed class; the stationary law is not unique."""
    pass


class EmissionUnderflowError(MetricWalkError):
    """Every emission weight underflowed to zero at some latent position."""
    pass


# =============================================================================
# Point sampling
# =============================================================================

def sample_uniform_square(n: int, seed: int, dim: int = 2) -> PointCloud:
    """n points uniform on the unit cube [0, 1]^dim."""
    rng = np.random.default_rng(seed)
    return PointCloud(rng.random((n, dim)))


def _check_finite(points: PointCloud):
    if not np.all(np.isfinite(points.coords)):
        bad = np.flatnonzero(~np.all(np.isfinite(points.coords), axis=1))
        raise NonFiniteInputError(f"non-finite coordinates at rows {bad[:10].tolist()}")


# =============================================================================
# Gaussian sentence walk: exact oracles
# =============================================================================

def _log_kernel(points: PointCloud, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    _check_finite(points)
    sq = cdist(points.coords, points.coords, metric="sqeuclidean")
    return -sq / sigma**2


def log_normalizers(points: PointCloud, sigma: float) -> np.ndarray:
    """log Z_i = log sum_k exp(-||x_i - x_k||^2 / sigma^2), self term included."""
    return logsumexp(_log_kernel(points, sigma), axis=1)


def exact_transition_matrix(points: PointCloud, sigma: float) -> np.ndarray:
    """Row-stochastic n x n transition matrix of the Gaussian sentence walk."""
    if points.n < 2:
        raise ValueError("exact_transition_matrix needs at least two points")
    logk = _log_kernel(points, sigma)
    logp = logk - logsumexp(logk, axis=1, keepdims=True)
    P = np.exp(logp)
    # renormalize away the last ulp of rounding so rows sum to one
    return P / P.sum(axis=1, keepdims=True)


def stationary_distribution(P: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """
    Stationary law pi with pi P = pi.

    Solves the linear system [P^T - I; 1^T] pi = [0; 1] by least squares and
    polishes with power iteration until the residual is below `tol`.
    """
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[0]
    if P.ndim != 2 or P.shape[1] != n:
        raise ValueError(f"transition matrix must be square, got {P.shape}")
    if not np.all(np.isfinite(P)) or P.min() < -1e-14:
        raise NotStochasticError("transition matrix has negative or non-finite entries")
    row_err = np.abs(P.sum(axis=1) - 1.0).max()
    if row_err > 1e-8:
        raise NotStochasticError(f"rows do not sum to one (max deviation {row_err:.3g})")

    n_comp, _ = connected_components(sp.csr_matrix(P > 0), directed=True, connection="strong")
    if n_comp > 1:
        raise ReducibleChainError(f"chain has {n_comp} strongly connected classes")

    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    for _ in range(1000):
        residual = np.abs(pi @ P - pi).max()
        if residual <= tol:
            break
        pi = pi @ P
        pi /= pi.sum()
    return pi


# =============================================================================
# Gaussian sentence walk: sampler
# =============================================================================

@dataclass
class GaussianWalkConfig:
    """Chain scale sigma, total steps m and sentence segmentation."""
    sigma: float
    steps: int
    sentence_length: int = 20
    restart_per_sentence: bool = False

    def validate(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.sentence_length < 1:
            raise ValueError(f"sentence_length must be >= 1, got {self.sentence_length}")


class _SuccessorPool:
    """
    Pre-drawn successors per state.

    Drawing successors in per-state blocks turns the sequential walk into a
    cheap pointer chase; blocks are refilled from the same generator, so the
    stream is still a pure function of the seed.
    """

    def __init__(self, P: np.ndarray, rng: np.random.Generator, expected: np.ndarray):
        self.P = P
        self.rng = rng
        self.n = P.shape[0]
        self.cdf = np.cumsum(P, axis=1)
        self.cdf[:, -1] = 1.0
        self.pools: List[List[int]] = []
        self.ptr = [0] * self.n
        for i in range(self.n):
            self.pools.append(self._draw(i, int(expected[i]) + 64))

    def _draw(self, i: int, size: int) -> List[int]:
        u = self.rng.random(size)
        return np.searchsorted(self.cdf[i], u, side="right").clip(0, self.n - 1).tolist()

    def next(self, i: int) -> int:
        p = self.ptr[i]
        pool = self.pools[i]
        if p >= len(pool):
            pool = self._draw(i, max(64, len(pool)))
            self.pools[i] = pool
            p = 0
        self.ptr[i] = p + 1
        return pool[p]


def gaussian_walk(points: PointCloud, config: GaussianWalkConfig, seed: int) -> Iterator[np.ndarray]:
    """
    Sample the Gaussian sentence walk for `config.steps` steps.

    Yields sentences of `sentence_length` token ids (the last may be shorter).
    The chain starts from its stationary law and carries its state across
    sentence boundaries unless `restart_per_sentence` is set.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    n = points.n
    if n == 1:
        _check_finite(points)
        remaining = config.steps
        while remaining > 0:
            size = min(config.sentence_length, remaining)
            yield np.zeros(size, dtype=np.int64)
            remaining -= size
        return

    P = exact_transition_matrix(points, config.sigma)
    log_z = log_normalizers(points, config.sigma)
    pi = np.exp(log_z - logsumexp(log_z))
    pool = _SuccessorPool(P, rng, expected=pi * config.steps * 1.05)
    start_cdf = np.cumsum(pi)

    def draw_start() -> int:
        return int(min(np.searchsorted(start_cdf, rng.random(), side="right"), n - 1))

    state = draw_start()
    emitted = 0
    while emitted < config.steps:
        size = min(config.sentence_length, config.steps - emitted)
        if config.restart_per_sentence and emitted > 0:
            state = draw_start()
        sentence = [state]
        for _ in range(size - 1):
            state = pool.next(state)
            sentence.append(state)
        emitted += size
        yield np.asarray(sentence, dtype=np.int64)
        if not config.restart_per_sentence:
            state = pool.next(state)


# =============================================================================
# Topic walk
# =============================================================================

@dataclass
class GaussianMixtureDensity:
    """
    Isotropic Gaussian mixture w(x) = sum_k pi_k N(x; mu_k, s_k^2 I).

    Supplies log w and its closed-form gradient for the topic walk drift.
    """
    means: np.ndarray
    scales: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        k = self.means.shape[0]
        self.scales = np.broadcast_to(np.asarray(self.scales, dtype=np.float64), (k,)).copy()
        if self.weights is None:
            self.weights = np.full(k, 1.0 / k)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.weights = self.weights / self.weights.sum()
        if np.any(self.scales <= 0):
            raise ValueError("mixture scales must be > 0")

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def _component_logs(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        d = self.dim
        sq = cdist(x, self.means, metric="sqeuclidean")
        return (
            np.log(self.weights)
            - 0.5 * sq / self.scales**2
            - d * np.log(self.scales)
            - 0.5 * d * np.log(2 * np.pi)
        )

    def log_density(self, x: np.ndarray) -> np.ndarray:
        return logsumexp(self._component_logs(x), axis=1)

    def grad_log_density(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        logs = self._component_logs(x)
        resp = np.exp(logs - logsumexp(logs, axis=1, keepdims=True))
        # d/dx log w = sum_k r_k (mu_k - x) / s_k^2
        inv = 1.0 / self.scales**2
        return (resp * inv) @ self.means - (resp @ inv)[:, None] * x

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(len(self.weights), size=size, p=self.weights)
        noise = rng.standard_normal((size, self.dim))
        return self.means[comp] + noise * self.scales[comp][:, None]


@dataclass
class TopicModelConfig:
    """
    Topic walk parameters.

    The jump kernel is an isotropic Gaussian with per-axis variance
    `kernel_variance * sigma^2`. With the default factor 2 the drift and the
    noise form an Euler-Maruyama Langevin step whose stationary law is w;
    factor 1 is the literal form of the jump rule.
    """
    sigma: float
    sigma_bar: float
    alpha: np.ndarray
    density: GaussianMixtureDensity
    kernel_variance: float = 2.0
    start: Optional[np.ndarray] = None

    def validate(self, n_words: int):
        if not (self.sigma > 0 and self.sigma_bar > 0 and self.kernel_variance > 0):
            raise ValueError("sigma, sigma_bar and kernel_variance must be > 0")
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if alpha.shape != (n_words,) or np.any(alpha <= 0):
            raise ValueError(f"alpha must hold {n_words} positive frequencies")

    @property
    def sigma0(self) -> float:
        """Second moment of the jump kernel."""
        return self.kernel_variance * self.density.dim * self.sigma**2


def topic_latent_path(config: TopicModelConfig, steps: int, seed: int) -> np.ndarray:
    """Latent positions Y_0..Y_{steps-1} of the topic walk."""
    rng = np.random.default_rng(seed)
    d = config.density.dim
    y = np.zeros(d) if config.start is None else np.asarray(config.start, dtype=np.float64)
    path = np.empty((steps, d))
    drift_scale = config.sigma**2
    noise_scale = np.sqrt(config.kernel_variance) * config.sigma
    noise = rng.standard_normal((steps, d))
    for t in range(steps):
        path[t] = y
        grad = config.density.grad_log_density(y)[0]
        y = y + drift_scale * grad + noise_scale * noise[t]
    return path


def topic_walk(
    points: PointCloud,
    config: TopicModelConfig,
    steps: int,
    seed: int,
    chunk: int = 4096,
) -> Iterator[int]:
    """
    Sample word ids emitted by the topic walk.

    Emission weights are alpha_i exp(-||x_i - Y_t||^2 / sigma_bar^2), evaluated
    without rescaling; if all of them underflow the offending Y_t is reported.
    """
    _check_finite(points)
    config.validate(points.n)
    if steps < 1:
        return
    latent_seed, emit_seed = np.random.SeedSequence(seed).generate_state(2)
    path = topic_latent_path(config, steps, int(latent_seed))
    rng = np.random.default_rng(int(emit_seed))
    alpha = np.asarray(config.alpha, dtype=np.float64)
    for lo in range(0, steps, chunk):
        block = path[lo:lo + chunk]
        sq = cdist(block, points.coords, metric="sqeuclidean")
        weights = alpha[None, :] * np.exp(-sq / config.sigma_bar**2)
        totals = weights.sum(axis=1)
        dead = np.flatnonzero(totals <= 0)
        if dead.size:
            y = block[dead[0]]
            raise EmissionUnderflowError(
                f"all emission weights underflow at step {lo + dead[0]}, Y_t = {y.tolist()}"
            )
        cdf = np.cumsum(weights / totals[:, None], axis=1)
        u = rng.random(block.shape[0])
        picks = (cdf < u[:, None]).sum(axis=1)
        for tok in np.minimum(picks, points.n - 1).tolist():
            yield tok
