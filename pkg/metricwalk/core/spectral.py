"""
metricwalk Spectral Recovery

Closed-form embeddings from counts:

- pointwise mutual information, shifted and truncated, factored by a
  symmetric eigendecomposition or a randomized SVD
- classical MDS on double-centered log-counts (or negative squared distances)
- orthogonal Procrustes alignment for comparing embeddings up to rotation
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import eigh, orthogonal_procrustes, qr, svd

from .optimizer import CountsLike, full_matrix
from .schemas import EmbeddingModel, MetricWalkError

logger = logging.getLogger("metricwalk.spectral")

# exact eigendecomposition is used up to this size for symmetric inputs
DENSE_LIMIT = 2000

_RANK_TOL = 1e-12


class EmptyRowError(MetricWalkError):
    """A word has no co-occurrences, so its PMI row is undefined."""
    pass


# =============================================================================
# PMI
# =============================================================================

@dataclass(frozen=True)
class PmiMatrix:
    """
    Dense PMI values with the mask of cells that had positive counts.

    Unobserved cells hold 0; `svd_embed` zeroes them again after the shift
    when truncating.
    """
    values: np.ndarray
    observed: np.ndarray
    smoothing: float = 0.0
    positive: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.values, self.values.T, atol=tol, rtol=0.0))


def pmi_matrix(counts: CountsLike, smoothing: float = 0.0, positive: bool = False) -> PmiMatrix:
    """
    M_ij = log C_ij - log sum_k C_ik - log sum_k C_kj + log sum_kl C_kl.

    `smoothing` adds a constant to every cell first; `positive` clips M at
    zero (PPMI).
    """
    if smoothing < 0:
        raise ValueError(f"smoothing must be >= 0, got {smoothing}")
    C = np.asarray(full_matrix(counts).toarray())
    if smoothing > 0:
        C = C + smoothing
    rows = C.sum(axis=1)
    cols = C.sum(axis=0)
    empty = np.flatnonzero(rows <= 0)
    if empty.size:
        raise EmptyRowError(f"row {int(empty[0])} has no counts")
    empty = np.flatnonzero(cols <= 0)
    if empty.size:
        raise EmptyRowError(f"column {int(empty[0])} has no counts")

    observed = C > 0
    values = np.zeros_like(C)
    log_total = np.log(C.sum())
    r_idx, c_idx = np.nonzero(observed)
    values[observed] = (
        np.log(C[observed]) - np.log(rows[r_idx]) - np.log(cols[c_idx]) + log_total
    )
    if positive:
        values = np.maximum(values, 0.0)
    return PmiMatrix(values=values, observed=observed, smoothing=smoothing, positive=positive)


# =============================================================================
# Factorizations
# =============================================================================

def _flip_signs(U: np.ndarray, V: Optional[np.ndarray] = None):
    """Make the largest-magnitude entry of each column of U positive."""
    if U.size == 0:
        return U, V
    pivot = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivot, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U = U * signs
    if V is not None:
        V = V * signs
    return U, V


def randomized_svd(
    A,
    d: int,
    oversample: int = 10,
    power_iters: int = 2,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rank-d SVD by random projection with QR-stabilized power iterations.

    Returns U (m x d), S (d,), V (n x d) with A ~ U diag(S) V^T. The sketch
    size d + oversample is clamped to min(m, n).
    """
    m, n = A.shape
    if not 1 <= d <= min(m, n):
        raise ValueError(f"d must satisfy 1 <= d <= min(m, n) (d={d}, shape={A.shape})")
    rng = np.random.default_rng(seed)
    width = min(d + oversample, min(m, n))
    Q, _ = qr(A @ rng.standard_normal((n, width)), mode="economic")
    for _ in range(power_iters):
        Z, _ = qr(A.T @ Q, mode="economic")
        Q, _ = qr(A @ Z, mode="economic")
    B = np.asarray((A.T @ Q).T)
    Ub, S, Vt = svd(B, full_matrices=False)
    U = Q @ Ub
    U, V = _flip_signs(U[:, :d], Vt[:d].T)
    return U, S[:d], V


def _top_eigenpairs(M: np.ndarray, d: int, what: str) -> Tuple[np.ndarray, np.ndarray]:
    """Top-d eigenpairs of a symmetric matrix; negative ones are zeroed with a warning."""
    n = M.shape[0]
    lo = max(n - d, 0)
    vals, vecs = eigh(M, subset_by_index=[lo, n - 1])
    vals, vecs = vals[::-1], vecs[:, ::-1]
    tol = _RANK_TOL * max(1.0, float(np.abs(vals).max()) if vals.size else 1.0)
    dropped = vals <= tol
    if dropped.any():
        logger.warning(
            "%s: %d of %d requested dimensions have non-positive eigenvalues; zero-padded",
            what, int(dropped.sum()), d,
        )
    vals = np.where(dropped, 0.0, vals)
    vecs, _ = _flip_signs(vecs)
    return vals, vecs


def svd_embed(
    M: PmiMatrix,
    d: int,
    tau: float = 0.0,
    truncate: bool = True,
    seed: int = 0,
    oversample: int = 10,
    power_iters: int = 2,
) -> EmbeddingModel:
    """
    Rank-d factorization 2 X X^T ~ (M + tau)_+ (or M + tau without truncation).

    Symmetric inputs up to DENSE_LIMIT words use the exact top eigenpairs;
    otherwise a randomized SVD with the square-root singular value split
    gives separate word and context vectors.
    """
    n = M.n
    if not 1 <= d <= n:
        raise ValueError(f"d must satisfy 1 <= d <= n (d={d}, n={n})")
    A = M.values + tau
    if truncate:
        A = np.maximum(A, 0.0)
        A[~M.observed] = 0.0
    A = A / 2.0

    if n <= DENSE_LIMIT and M.is_symmetric():
        vals, vecs = _top_eigenpairs(A, d, "svd_embed")
        X = vecs * np.sqrt(vals)
        return EmbeddingModel.from_vectors(X)

    U, S, V = randomized_svd(A, d, oversample=oversample, power_iters=power_iters, seed=seed)
    tol = _RANK_TOL * max(1.0, float(S.max()) if S.size else 1.0)
    if np.any(S <= tol):
        logger.warning("svd_embed: numerical rank below %d; zero-padded", d)
        S = np.where(S <= tol, 0.0, S)
    root = np.sqrt(S)
    return EmbeddingModel.from_vectors(U * root, V * root)


def double_center(L: np.ndarray) -> np.ndarray:
    """V L V / 2 with V = I - 11^T/n, after symmetrizing L."""
    L = np.asarray(L, dtype=np.float64)
    L = (L + L.T) / 2.0
    centered = L - L.mean(axis=0, keepdims=True)
    centered = centered - centered.mean(axis=1, keepdims=True)
    return centered / 2.0


def mds_embed(L: np.ndarray, d: int) -> EmbeddingModel:
    """
    Classical MDS: top-d eigenpairs of the double-centered matrix.

    Additive row and column offsets in L are annihilated by the centering.
    Negative eigenvalues are dropped (zero coordinates).
    """
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"L must be square, got shape {L.shape}")
    if not np.all(np.isfinite(L)):
        raise ValueError("L must be finite")
    n = L.shape[0]
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if n == 1:
        return EmbeddingModel.from_vectors(np.zeros((1, d)))
    k = min(d, n)
    vals, vecs = _top_eigenpairs(double_center(L), k, "mds_embed")
    X = np.zeros((n, d))
    X[:, :k] = vecs * np.sqrt(vals)
    return EmbeddingModel.from_vectors(X)


# =============================================================================
# Alignment
# =============================================================================

def procrustes_align(
    A: np.ndarray,
    B: np.ndarray,
    center: bool = False,
    scale: bool = False,
) -> Tuple[np.ndarray, float]:
    """
    Orthogonal Q minimizing ||s (A - a) Q - (B - b)||_F and the residual norm.

    Translations a, b are column means when `center`, else zero; s is the
    optimal uniform scale when `scale`, else 1.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"shapes differ: {A.shape} vs {B.shape}")
    if center:
        A = A - A.mean(axis=0)
        B = B - B.mean(axis=0)
    Q, singular_sum = orthogonal_procrustes(A, B)
    s = 1.0
    if scale:
        norm = float(np.sum(A ** 2))
        s = singular_sum / norm if norm > 0 else 1.0
    residual = float(np.linalg.norm(s * A @ Q - B))
    return Q, residual
