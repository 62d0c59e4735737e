"""
metricwalk Pipelines

The chained experiments, as plain functions shared by the CLI and tests:

- Varadhan demo: uniform points -> kNN graph -> simple random walks ->
  counts -> diagnostic, plus an exact matrix-power sweep over walk lengths
- MNIST demo: IDX subset -> kNN graph -> walks -> counts -> metric
  regression and PMI-SVD embeddings -> kNN label purity
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .cooccur import count_cooccurrences, window_weights
from .evaluate import DEFAULT_PURITY_K, knn_purity, varadhan_diagnostic, varadhan_sweep
from .generators import sample_uniform_square
from .graphs import build_knn_graph, simple_random_walks, t_step_conditionals
from .io import load_mnist
from .optimizer import TrainConfig, train
from .schemas import CooccurrenceCounts, EmbeddingModel, PointCloud, SpatialGraph, Vocabulary, Weighting
from .seeding import derive_seed, stream
from .spectral import pmi_matrix, svd_embed

logger = logging.getLogger("metricwalk.pipelines")


def walk_counts(
    graph: SpatialGraph,
    walks_per_node: int,
    walk_length: int,
    window: int,
    weighting: Weighting,
    seed: int,
) -> CooccurrenceCounts:
    """Simple random walks on the graph -> windowed counts over node ids."""
    walks = simple_random_walks(graph, walks_per_node, walk_length, derive_seed(seed, "walks"))
    return count_cooccurrences(walks, Vocabulary.from_ids(graph.n), window, weighting)


def mean_lag(window: int, weighting: Weighting) -> float:
    """Expected offset sum_t t w(t) under the window weights."""
    w = window_weights(window, weighting)
    return float(np.sum(np.arange(1, window + 1) * w))


# =============================================================================
# Varadhan demo
# =============================================================================

@dataclass
class VaradhanSettings:
    n_points: int = 2000
    knn_k: int = 10
    walks_per_node: int = 10
    walk_length: int = 200
    window: int = 5
    weighting: Weighting = Weighting.HARMONIC
    sweep: Tuple[int, ...] = (2, 4, 8, 16)
    seed: int = 0


def demo_varadhan(settings: VaradhanSettings) -> Dict[str, Any]:
    """Deterministic report for the random-walk metric recovery experiment."""
    t0 = time.perf_counter()
    s = settings
    points = sample_uniform_square(s.n_points, derive_seed(s.seed, "points"))
    sq_dist = cdist(points.coords, points.coords, metric="sqeuclidean")

    graph = build_knn_graph(points, s.knn_k)
    counts = walk_counts(graph, s.walks_per_node, s.walk_length, s.window, s.weighting, s.seed)
    walk_fit = varadhan_diagnostic(counts.matrix, sq_dist, t_hat=mean_lag(s.window, s.weighting))
    logger.debug("walk counts diagnostic in %.2fs", time.perf_counter() - t0)

    conditionals = {t: t_step_conditionals(graph, t) for t in s.sweep}
    sweep = varadhan_sweep(conditionals, sq_dist)
    best_t = sweep.best_t

    perm = stream(s.seed, "permutation").permutation(s.n_points)
    null = varadhan_diagnostic(conditionals[best_t], sq_dist[perm], t_hat=float(best_t))
    logger.debug("varadhan demo finished in %.2fs", time.perf_counter() - t0)

    return {
        "points": s.n_points,
        "graph": {"kind": "knn", "k": s.knn_k, "edges": int(graph.adjacency.nnz)},
        "walks": {
            "per_node": s.walks_per_node,
            "length": s.walk_length,
            "window": s.window,
            "weighting": s.weighting.value,
            "tokens": counts.total_tokens,
            "stored_pairs": counts.nnz,
        },
        "walk_counts": walk_fit.to_dict(),
        "exact_sweep": sweep.to_dict(),
        "permutation_null": null.to_dict(),
        "seed": s.seed,
    }


# =============================================================================
# MNIST demo
# =============================================================================

@dataclass
class MnistSettings:
    subset: int = 4000
    knn_k: int = 20
    walks_per_node: int = 10
    walk_length: int = 200
    window: int = 5
    weighting: Weighting = Weighting.HARMONIC
    dim: int = 2
    purity_k: int = DEFAULT_PURITY_K
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass
class MnistResult:
    report: Dict[str, Any]
    points: PointCloud
    regression: EmbeddingModel
    svd: EmbeddingModel


def subsample(points: PointCloud, size: Optional[int], seed: int) -> PointCloud:
    """Sorted uniform subset without replacement (all points when size is None or too large)."""
    if size is None or size >= points.n:
        return points
    idx = np.sort(stream(seed, "subset").choice(points.n, size=size, replace=False))
    return points.subset(idx)


def demo_mnist(images: Path, labels: Path, settings: MnistSettings) -> MnistResult:
    s = settings
    points = subsample(load_mnist(images, labels), s.subset, s.seed)
    logger.info("mnist: %d points of dimension %d", points.n, points.dim)
    graph = build_knn_graph(points, s.knn_k)
    counts = walk_counts(graph, s.walks_per_node, s.walk_length, s.window, s.weighting, s.seed)

    train_config = TrainConfig.from_dict({**s.train.to_dict(), "seed": derive_seed(s.seed, "fit")})
    fitted = train(counts, s.dim, train_config)
    spectral = svd_embed(pmi_matrix(counts), s.dim, seed=derive_seed(s.seed, "svd"))

    report = {
        "points": points.n,
        "dim": s.dim,
        "graph": {"kind": "knn", "k": s.knn_k},
        "walks": {"per_node": s.walks_per_node, "length": s.walk_length, "window": s.window},
        "purity_k": s.purity_k,
        "regression": {
            "purity": knn_purity(fitted.model.vectors(), points.labels, s.purity_k),
            **fitted.to_dict(),
        },
        "svd": {"purity": knn_purity(spectral.vectors(), points.labels, s.purity_k)},
        "seed": s.seed,
    }
    return MnistResult(report=report, points=points, regression=fitted.model, svd=spectral)
