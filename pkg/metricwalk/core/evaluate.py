"""
metricwalk Evaluation

Inductive-reasoning solvers over word vectors, manifold quality metrics and
the Varadhan diagnostic that checks whether log co-occurrence conditionals
behave like squared distances.

Solvers build an ideal point from the question words and rank candidates
against it:

    analogy         b - a + c
    sat             B - A against each option D_i - C_i
    sequence        w_n + (w_n - w_1) / n
    classification  mean of the given words
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lstsq
from scipy.spatial import cKDTree

from .schemas import (
    EvalItem,
    EvalReport,
    ItemKind,
    MetricWalkError,
    SectionReport,
    WordVectors,
)

logger = logging.getLogger("metricwalk.evaluate")

DEFAULT_ANSWER_VOCAB = 30000
DEFAULT_PURITY_K = 5

_SCORE_BLOCK = 256


class InsufficientPairsError(MetricWalkError):
    """Too few usable pairs to fit the diagnostic regression."""
    pass


class Metric(Enum):
    COSINE = "cosine"
    L2 = "l2"
    DIFF_COSINE = "diff_cosine"


def _metric(metric: Union[Metric, str]) -> Metric:
    return metric if isinstance(metric, Metric) else Metric(metric)


# =============================================================================
# Ideal points
# =============================================================================

SatIdeal = Tuple[np.ndarray, np.ndarray]


def ideal_point(item: EvalItem, vectors: WordVectors) -> Optional[Union[np.ndarray, SatIdeal]]:
    """
    Target vector for the item, or None when a needed word is missing.

    SAT items return (B - A, stacked option differences D_i - C_i).
    """
    if any(w not in vectors for w in item.words()):
        return None
    q = [vectors[w] for w in item.query]
    if item.kind is ItemKind.ANALOGY:
        a, b, c = q
        return b - a + c
    if item.kind is ItemKind.SAT:
        a, b = q
        options = np.stack([vectors[d] - vectors[c] for c, d in item.pairs])
        return b - a, options
    if item.kind is ItemKind.SEQUENCE:
        n = len(q)
        return q[-1] + (q[-1] - q[0]) / n
    return np.mean(np.stack(q), axis=0)


# =============================================================================
# Ranking
# =============================================================================

def _scores(ideals: np.ndarray, candidates: np.ndarray, metric: Metric) -> Tuple[np.ndarray, np.ndarray]:
    """
    Similarity scores (higher is better) of each ideal against each candidate,
    plus the mask of usable candidates.
    """
    ideals = np.atleast_2d(ideals)
    if metric is Metric.L2:
        sq = (
            np.sum(ideals ** 2, axis=1)[:, None]
            + np.sum(candidates ** 2, axis=1)[None, :]
            - 2.0 * ideals @ candidates.T
        )
        return -np.maximum(sq, 0.0), np.ones(candidates.shape[0], dtype=bool)
    c_norm = np.linalg.norm(candidates, axis=1)
    usable = c_norm > 0
    i_norm = np.linalg.norm(ideals, axis=1)
    safe_c = np.where(usable, c_norm, 1.0)
    safe_i = np.where(i_norm > 0, i_norm, 1.0)
    sims = (ideals / safe_i[:, None]) @ (candidates / safe_c[:, None]).T
    return sims, usable


def rank_candidates(
    ideal: np.ndarray,
    candidates: np.ndarray,
    metric: Union[Metric, str] = Metric.COSINE,
    exclusions: Iterable[int] = (),
    ids: Optional[Sequence[int]] = None,
) -> List[int]:
    """
    Candidate ids ordered best first; ties go to the smaller id.

    Under cosine metrics, zero-norm candidates are skipped with a warning.
    """
    metric = _metric(metric)
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    ids_arr = np.arange(candidates.shape[0]) if ids is None else np.asarray(ids, dtype=np.int64)
    scores, usable = _scores(np.asarray(ideal, dtype=np.float64), candidates, metric)
    if not usable.all():
        logger.warning("skipping %d zero-norm candidates", int((~usable).sum()))
    keep = usable & ~np.isin(ids_arr, np.fromiter(exclusions, dtype=np.int64))
    order = np.lexsort((ids_arr[keep], -scores[0][keep]))
    return ids_arr[keep][order].tolist()


# =============================================================================
# Task evaluation
# =============================================================================

def _top_ids(scores: np.ndarray, k: int) -> np.ndarray:
    # stable sort keeps ascending id among equal scores
    return np.argsort(-scores, axis=1, kind="stable")[:, :k]


def evaluate_task(
    items: Sequence[EvalItem],
    vectors: WordVectors,
    metric: Union[Metric, str] = Metric.COSINE,
    answer_vocab_limit: int = DEFAULT_ANSWER_VOCAB,
    top_k: int = 1,
    exclude_query: bool = True,
) -> EvalReport:
    """
    Accuracy over covered items (all words in vocabulary), per section.

    Open-vocabulary items rank the `answer_vocab_limit` most frequent words,
    minus the question words when `exclude_query`; multiple-choice items rank
    their own options. SAT items compare pair differences: cosine metrics use
    diff-cosine, l2 uses distances between differences.
    """
    metric = _metric(metric)
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    base = vectors.normalized() if metric is Metric.COSINE else vectors
    limit = min(answer_vocab_limit, len(vectors.words))
    answer_space = base.vectors[:limit]
    zero_answers = int(np.count_nonzero(np.linalg.norm(answer_space, axis=1) == 0))
    if metric is not Metric.L2 and zero_answers:
        logger.warning("skipping %d zero-norm candidates in the answer vocabulary", zero_answers)

    sections: Dict[str, SectionReport] = {}
    open_items: List[Tuple[EvalItem, np.ndarray]] = []

    def record(item: EvalItem, top: Sequence[int], answer_id: int):
        report = sections[item.section or item.kind.value]
        report.correct += int(len(top) > 0 and top[0] == answer_id)
        report.correct_top_k += int(answer_id in list(top[:top_k]))

    for item in items:
        name = item.section or item.kind.value
        report = sections.setdefault(name, SectionReport())
        report.total += 1
        ideal = ideal_point(item, base if item.kind is not ItemKind.SAT else vectors)
        if ideal is None:
            continue
        report.covered += 1

        if item.kind is ItemKind.SAT:
            target, options = ideal
            sat_metric = Metric.L2 if metric is Metric.L2 else Metric.DIFF_COSINE
            ranked = rank_candidates(target, options, sat_metric)
            record(item, ranked, int(item.answer))
        elif item.open_vocabulary:
            open_items.append((item, ideal))
        else:
            cands = np.stack([base[w] for w in item.choices])
            ranked = rank_candidates(ideal, cands, metric)
            record(item, ranked, list(item.choices).index(item.answer))

    for lo in range(0, len(open_items), _SCORE_BLOCK):
        block = open_items[lo:lo + _SCORE_BLOCK]
        ideals = np.stack([ideal for _, ideal in block])
        scores, usable = _scores(ideals, answer_space, metric)
        scores[:, ~usable] = -np.inf
        for row, (item, _) in enumerate(block):
            if exclude_query:
                excluded = [vectors.index[w] for w in item.query if vectors.index[w] < limit]
                scores[row, excluded] = -np.inf
        top = _top_ids(scores, top_k)
        for row, (item, _) in enumerate(block):
            record(item, top[row].tolist(), vectors.index[item.answer])

    covered = sum(s.covered for s in sections.values())
    total = sum(s.total for s in sections.values())
    correct = sum(s.correct for s in sections.values())
    correct_k = sum(s.correct_top_k for s in sections.values())
    accuracy = correct / covered if covered else 0.0
    if covered == 0 and total:
        logger.warning("no item is covered by the vocabulary; accuracy reported as 0")
    return EvalReport(
        accuracy=accuracy,
        covered=covered,
        total=total,
        metric=metric.value,
        k=top_k,
        top_k_accuracy=(correct_k / covered if covered else 0.0) if top_k > 1 else None,
        sections=sections,
    )


# =============================================================================
# Manifold quality
# =============================================================================

def knn_purity(vectors: np.ndarray, labels: np.ndarray, k: int = DEFAULT_PURITY_K) -> float:
    """Mean fraction of each point's k nearest neighbors (self excluded) sharing its label."""
    X = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(labels)
    n = X.shape[0]
    if labels.shape[0] != n:
        raise ValueError("one label per point required")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    _, nbrs = cKDTree(X).query(X, k=k + 1)
    not_self = nbrs != np.arange(n)[:, None]
    # move self (when found) to the end, keep the order of the rest
    order = np.argsort(~not_self, axis=1, kind="stable")[:, :k]
    nbrs = np.take_along_axis(nbrs, order, axis=1)
    return float(np.mean(labels[nbrs] == labels[:, None]))


# =============================================================================
# Varadhan diagnostic
# =============================================================================

@dataclass
class VaradhanFit:
    """
    Fit of -t log P_ij = slope * rho2_ij + u_i + v_j over included pairs.

    `r_squared` is the within R^2: the share of the variance left after the
    row and column intercepts that rho^2 explains.
    """
    slope: float
    r_squared: float
    row_intercepts: np.ndarray
    col_intercepts: np.ndarray
    included: int
    excluded_zero: int
    t_hat: float

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "r_squared": self.r_squared,
            "included": self.included,
            "excluded_zero": self.excluded_zero,
            "t_hat": self.t_hat,
        }


def _dense(matrix) -> np.ndarray:
    if sp.issparse(matrix):
        return np.asarray(matrix.toarray(), dtype=np.float64)
    if hasattr(matrix, "matrix") and hasattr(matrix, "weighting"):
        return np.asarray(matrix.matrix.toarray(), dtype=np.float64)
    return np.asarray(matrix, dtype=np.float64)


def _fit_intercepts(y: np.ndarray, rows: np.ndarray, cols: np.ndarray, n: int, extra: Optional[np.ndarray]):
    """
    Least squares for y ~ [extra] + u_rows + v_cols with sum(u) = 0.

    Solved through the normal equations bordered by the gauge constraint.
    """
    m = y.size
    blocks = []
    if extra is not None:
        blocks.append(sp.csr_matrix(extra[:, None]))
    ones = np.ones(m)
    blocks.append(sp.csr_matrix((ones, (np.arange(m), rows)), shape=(m, n)))
    blocks.append(sp.csr_matrix((ones, (np.arange(m), cols)), shape=(m, n)))
    X = sp.hstack(blocks, format="csr")
    p = X.shape[1]
    XtX = (X.T @ X).toarray()
    Xty = X.T @ y
    gauge = np.zeros(p)
    offset = 1 if extra is not None else 0
    gauge[offset:offset + n] = 1.0
    kkt = np.zeros((p + 1, p + 1))
    kkt[:p, :p] = XtX
    kkt[p, :p] = gauge
    kkt[:p, p] = gauge
    rhs = np.concatenate([Xty, [0.0]])
    sol, *_ = lstsq(kkt, rhs, lapack_driver="gelsy")
    beta = sol[:p]
    resid = y - X @ beta
    return beta, float(resid @ resid)


def varadhan_diagnostic(
    conditionals,
    sq_dist: np.ndarray,
    t_hat: float = 1.0,
    include_diagonal: bool = False,
) -> VaradhanFit:
    """
    Regress -t_hat log P_ij on rho2_ij with free row and column intercepts.

    `conditionals` may be conditional probabilities or raw counts (row scale
    is absorbed by the intercepts). Zero cells are excluded and counted.
    """
    P = _dense(conditionals)
    D = np.asarray(sq_dist, dtype=np.float64)
    if P.shape != D.shape or P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError(f"conditionals {P.shape} and sq_dist {D.shape} must be equal square shapes")
    if not t_hat > 0:
        raise ValueError(f"t_hat must be > 0, got {t_hat}")
    n = P.shape[0]
    candidate = np.isfinite(D)
    if not include_diagonal:
        np.fill_diagonal(candidate, False)
    positive = P > 0
    included = candidate & positive
    excluded_zero = int(np.count_nonzero(candidate & ~positive))
    if excluded_zero:
        logger.warning("excluded %d zero cells from the diagnostic", excluded_zero)

    rows, cols = np.nonzero(included)
    params = 2 * n
    if rows.size < params:
        raise InsufficientPairsError(
            f"{rows.size} usable pairs for {params} parameters (n={n})"
        )
    y = -t_hat * np.log(P[rows, cols])
    x = D[rows, cols]

    beta, ssr_full = _fit_intercepts(y, rows, cols, n, x)
    _, ssr_null = _fit_intercepts(y, rows, cols, n, None)
    if ssr_null <= 1e-300:
        r2 = 1.0
    else:
        r2 = max(0.0, 1.0 - ssr_full / ssr_null)
    return VaradhanFit(
        slope=float(beta[0]),
        r_squared=float(r2),
        row_intercepts=beta[1:n + 1],
        col_intercepts=beta[n + 1:],
        included=int(rows.size),
        excluded_zero=excluded_zero,
        t_hat=float(t_hat),
    )


@dataclass
class VaradhanSweep:
    fits: Dict[int, VaradhanFit] = field(default_factory=dict)

    @property
    def best_t(self) -> int:
        return max(sorted(self.fits), key=lambda t: self.fits[t].r_squared)

    @property
    def best(self) -> VaradhanFit:
        return self.fits[self.best_t]

    def to_dict(self) -> dict:
        return {
            "best_t": self.best_t,
            "fits": {str(t): self.fits[t].to_dict() for t in sorted(self.fits)},
        }


def varadhan_sweep(conditionals_by_t: Mapping[int, object], sq_dist: np.ndarray) -> VaradhanSweep:
    """Run the diagnostic at each walk length t (t_hat = t) and keep every fit."""
    sweep = VaradhanSweep()
    for t in sorted(conditionals_by_t):
        sweep.fits[t] = varadhan_diagnostic(conditionals_by_t[t], sq_dist, t_hat=float(t))
        logger.info("t=%d: slope %.4g, R^2 %.4f", t, sweep.fits[t].slope, sweep.fits[t].r_squared)
    return sweep
