"""
metricwalk Spatial Graphs

Deterministic spatial graphs over point clouds (k-nearest-neighbor and
epsilon-ball), simple random walks on them, and the oracles used to check
metric recovery on graphs:

- exact t-step conditionals P^t of the simple random walk (matrix power)
- geodesic distances with Euclidean edge lengths (shortest paths)
- squared distances derived from a weighted survey graph
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .schemas import GraphKind, MetricWalkError, PointCloud, SpatialGraph

logger = logging.getLogger("metricwalk.graphs")

# Rows of the distance matrix materialized at once when building kNN graphs.
_KNN_BLOCK = 512


class SinkVerticesError(MetricWalkError):
    """Some vertices have no out-edges, so a walk cannot continue."""
    pass


class NonPositiveWeightError(MetricWalkError):
    """A survey edge weight is zero or negative."""
    pass


# =============================================================================
# Graph construction
# =============================================================================

def build_knn_graph(points: PointCloud, k: int) -> SpatialGraph:
    """
    Directed kNN graph: i -> j for the k nearest points j != i.

    Equal distances are resolved by ascending index, so duplicate points never
    make the construction ambiguous.
    """
    n = points.n
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    X = points.coords
    neighbors = np.empty((n, k), dtype=np.int64)
    for lo in range(0, n, _KNN_BLOCK):
        hi = min(lo + _KNN_BLOCK, n)
        dist = cdist(X[lo:hi], X, metric="sqeuclidean")
        dist[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        # stable sort keeps ascending index among equal distances
        order = np.argsort(dist, axis=1, kind="stable")
        neighbors[lo:hi] = order[:, :k]
    rows = np.repeat(np.arange(n), k)
    adjacency = sp.csr_matrix(
        (np.ones(n * k), (rows, neighbors.ravel())), shape=(n, n)
    )
    adjacency.sort_indices()
    logger.info("kNN graph: n=%d k=%d", n, k)
    return SpatialGraph(adjacency=adjacency, kind=GraphKind.KNN, param=float(k), points=points)


def build_eps_graph(points: PointCloud, eps: float) -> SpatialGraph:
    """Symmetric epsilon-ball graph: i <-> j iff 0 < ||x_i - x_j|| <= eps."""
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    n = points.n
    tree = cKDTree(points.coords)
    pairs = tree.query_pairs(r=eps, output_type="ndarray")
    if pairs.size:
        diff = points.coords[pairs[:, 0]] - points.coords[pairs[:, 1]]
        pairs = pairs[np.linalg.norm(diff, axis=1) > 0]
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]]) if pairs.size else np.empty(0, np.int64)
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]]) if pairs.size else np.empty(0, np.int64)
    adjacency = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    adjacency.sort_indices()
    logger.info("eps graph: n=%d eps=%g edges=%d", n, eps, adjacency.nnz)
    return SpatialGraph(adjacency=adjacency, kind=GraphKind.EPS, param=float(eps), points=points)


def to_networkx(graph: SpatialGraph) -> nx.DiGraph:
    """Directed networkx view with Euclidean edge lengths as `weight`."""
    g = nx.DiGraph()
    g.add_nodes_from(range(graph.n))
    X = graph.points.coords
    for i, j in graph.edges():
        g.add_edge(i, j, weight=float(np.linalg.norm(X[i] - X[j])))
    return g


def is_weakly_connected(graph: SpatialGraph) -> bool:
    return nx.is_weakly_connected(to_networkx(graph))


def largest_component(graph: SpatialGraph) -> np.ndarray:
    """Sorted vertex ids of the largest weakly connected component (ties: smallest id)."""
    parts = nx.weakly_connected_components(to_networkx(graph))
    keep = max(parts, key=lambda c: (len(c), -min(c)))
    return np.asarray(sorted(keep), dtype=np.int64)


# =============================================================================
# Walks
# =============================================================================

def transition_matrix(graph: SpatialGraph) -> sp.csr_matrix:
    """Uniform next-step matrix of the simple random walk."""
    deg = graph.out_degree().astype(np.float64)
    inv = np.zeros_like(deg)
    inv[deg > 0] = 1.0 / deg[deg > 0]
    return sp.csr_matrix(sp.diags(inv) @ graph.adjacency)


def _check_sinks(graph: SpatialGraph):
    sinks = np.flatnonzero(graph.out_degree() == 0)
    if sinks.size:
        shown = sinks[:20].tolist()
        more = "" if sinks.size <= 20 else f" (+{sinks.size - 20} more)"
        raise SinkVerticesError(f"vertices without out-edges: {shown}{more}")


def simple_random_walks(
    graph: SpatialGraph,
    walks_per_node: int,
    length: int,
    seed: int,
    starts: Iterable[int] | None = None,
) -> Iterator[np.ndarray]:
    """
    Uniform random walks: `walks_per_node` rounds over every vertex, each walk
    `length` ids long including its start.

    All walks of one round advance together, one vectorized step at a time.
    """
    if walks_per_node < 1 or length < 1:
        raise ValueError("walks_per_node and length must be >= 1")
    _check_sinks(graph)
    rng = np.random.default_rng(seed)
    indptr = graph.adjacency.indptr
    indices = graph.adjacency.indices
    deg = np.diff(indptr)
    start_nodes = np.arange(graph.n) if starts is None else np.asarray(list(starts), dtype=np.int64)
    for _ in range(walks_per_node):
        walks = np.empty((start_nodes.size, length), dtype=np.int64)
        cur = start_nodes.copy()
        walks[:, 0] = cur
        for step in range(1, length):
            offset = np.floor(rng.random(cur.size) * deg[cur]).astype(np.int64)
            cur = indices[indptr[cur] + offset]
            walks[:, step] = cur
        yield from walks


def t_step_conditionals(graph: SpatialGraph, t: int) -> np.ndarray:
    """Exact P(X_t = j | X_0 = i) of the simple random walk, dense n x n."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    _check_sinks(graph)
    P = transition_matrix(graph)
    out = P.toarray()
    for _ in range(t - 1):
        # (P^s) P computed as (P^T (P^s)^T)^T to keep the sparse factor on the left
        out = (P.T @ out.T).T
    return np.asarray(out)


def empirical_conditionals(walks: Iterable[np.ndarray], n: int, t: int) -> np.ndarray:
    """Row-normalized counts of (walk[s], walk[s + t]) over all walks and offsets s."""
    counts = np.zeros((n, n))
    for w in walks:
        w = np.asarray(w)
        if w.size > t:
            np.add.at(counts, (w[:-t], w[t:]), 1.0)
    sums = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, sums, out=np.zeros_like(counts), where=sums > 0)


# =============================================================================
# Geodesics
# =============================================================================

def edge_lengths(graph: SpatialGraph) -> sp.csr_matrix:
    """Adjacency with each edge weighted by its Euclidean length."""
    coo = graph.adjacency.tocoo()
    X = graph.points.coords
    lengths = np.linalg.norm(X[coo.row] - X[coo.col], axis=1)
    return sp.csr_matrix((lengths, (coo.row, coo.col)), shape=graph.adjacency.shape)


def graph_geodesics(graph: SpatialGraph, directed: bool = False) -> np.ndarray:
    """
    All-pairs shortest-path lengths with Euclidean edge weights.

    Edges are traversed in both directions unless `directed`; unreachable
    pairs are +inf.
    """
    weights = edge_lengths(graph)
    if not directed and not is_weakly_connected(graph):
        logger.warning("graph is not weakly connected; unreachable pairs are +inf")
    return dijkstra(weights, directed=directed)


# =============================================================================
# Survey graphs
# =============================================================================

@dataclass(frozen=True)
class SurveyDistances:
    """Squared distances -log(w_ij / max w) over a symmetrized survey graph."""
    sq_dist: sp.csr_matrix
    nodes: Tuple[int, ...]


def survey_graph_to_counts(
    weighted_edges: Iterable[Tuple[int, int, float]],
    largest_component: bool = False,
) -> SurveyDistances:
    """
    Convert a weighted association graph into squared edge distances.

    Directed weights are symmetrized by averaging the directions present;
    the heaviest edge maps to distance zero. With `largest_component` the
    result is restricted (and re-indexed) to the largest connected component.
    """
    sym = {}
    for i, j, w in weighted_edges:
        if not w > 0:
            raise NonPositiveWeightError(f"edge ({i}, {j}) has weight {w}")
        key = (min(i, j), max(i, j))
        sym.setdefault(key, []).append(float(w))
    if not sym:
        return SurveyDistances(sp.csr_matrix((0, 0)), ())

    g = nx.Graph()
    for (i, j), ws in sym.items():
        g.add_edge(i, j, weight=float(np.mean(ws)))
    if largest_component:
        keep = max(nx.connected_components(g), key=lambda c: (len(c), -min(c)))
        g = g.subgraph(keep).copy()
    nodes: List[int] = sorted(g.nodes())
    pos = {v: k for k, v in enumerate(nodes)}
    wmax = max(d["weight"] for _, _, d in g.edges(data=True))
    rows, cols, vals = [], [], []
    for i, j, d in g.edges(data=True):
        d2 = -np.log(d["weight"] / wmax)
        rows.extend([pos[i], pos[j]])
        cols.extend([pos[j], pos[i]])
        vals.extend([d2, d2])
    m = len(nodes)
    # explicit zeros are meaningful here (max-weight edges), keep them stored
    sq = sp.csr_matrix((np.asarray(vals), (rows, cols)), shape=(m, m))
    return SurveyDistances(sq_dist=sq, nodes=tuple(nodes))
