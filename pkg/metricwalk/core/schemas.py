"""
metricwalk Schemas

Shared domain types passed between the counting, generating, fitting and
evaluation stages. Everything here is a plain dataclass (or enum) so the
stages stay decoupled: a counts object produced by a random walk is the same
object produced from a text corpus.

Objects are treated as immutable once built. Helpers that "change" them
return new instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp


# =============================================================================
# Errors
# =============================================================================

class MetricWalkError(Exception):
    """Base class for every domain error raised by metricwalk."""
    pass


class FormatError(MetricWalkError):
    """An input file does not match the declared format."""
    pass


# =============================================================================
# Vocabulary
# =============================================================================

@dataclass(frozen=True)
class Vocabulary:
    """
    Word <-> id map ordered by descending frequency.

    Ids are 0..n-1; ties in frequency are broken lexicographically so the
    ordering is a pure function of the token multiset.
    """
    words: Tuple[str, ...]
    counts: Tuple[int, ...]
    id_of: Dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if len(self.words) != len(self.counts):
            raise ValueError("words and counts must have equal length")
        if not self.id_of:
            object.__setattr__(self, "id_of", {w: i for i, w in enumerate(self.words)})

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.id_of

    def freq(self, idx: int) -> int:
        return self.counts[idx]

    def encode(self, tokens: List[str]) -> np.ndarray:
        """Map tokens to ids, dropping out-of-vocabulary tokens (positions close up)."""
        ids = [self.id_of[t] for t in tokens if t in self.id_of]
        return np.asarray(ids, dtype=np.int64)

    @classmethod
    def from_ids(cls, n: int) -> "Vocabulary":
        """Vocabulary whose words are the decimal node ids 0..n-1 (walk output)."""
        return cls(words=tuple(str(i) for i in range(n)), counts=tuple([0] * n))


# =============================================================================
# Co-occurrence counts
# =============================================================================

class Weighting(Enum):
    """How window distance t is weighted when counting."""
    HARMONIC = "harmonic"   # w(t) = (1/t) / H_W
    UNIFORM = "uniform"     # w(t) = 1 / W
    RAW = "raw"             # directed one-step counts, weight 1

    @property
    def symmetric(self) -> bool:
        return self is not Weighting.RAW


@dataclass(frozen=True)
class CooccurrenceCounts:
    """
    Sparse weighted co-occurrence counts.

    For symmetric weightings only the upper triangle (i <= j) is stored;
    `matrix` rebuilds the full symmetric matrix. Raw-transition counts are
    directed and stored in full.
    """
    entries: sp.csr_matrix
    vocab_size: int
    window: int
    weighting: Weighting
    total_tokens: int

    def __post_init__(self):
        if self.entries.shape != (self.vocab_size, self.vocab_size):
            raise ValueError(
                f"entries shape {self.entries.shape} does not match vocab_size {self.vocab_size}"
            )
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")

    @property
    def matrix(self) -> sp.csr_matrix:
        """Full n x n count matrix."""
        if not self.weighting.symmetric:
            return self.entries
        upper = self.entries
        full = upper + upper.T - sp.diags(upper.diagonal())
        return sp.csr_matrix(full)

    @property
    def nnz(self) -> int:
        return int(self.entries.nnz)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def row_conditionals(self) -> sp.csr_matrix:
        """C_ij / sum_k C_ik; empty rows stay empty."""
        full = self.matrix
        sums = np.asarray(full.sum(axis=1)).ravel()
        inv = np.zeros_like(sums)
        inv[sums > 0] = 1.0 / sums[sums > 0]
        return sp.csr_matrix(sp.diags(inv) @ full)

    def metadata_key(self) -> Tuple[int, int, Weighting]:
        return (self.vocab_size, self.window, self.weighting)


# =============================================================================
# Point clouds and graphs
# =============================================================================

@dataclass(frozen=True)
class PointCloud:
    """Latent coordinates x_i (rows) with optional integer labels."""
    coords: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise ValueError(f"coords must be an n x d matrix with n >= 1, got {coords.shape}")
        object.__setattr__(self, "coords", coords)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (coords.shape[0],):
                raise ValueError("labels must have one entry per point")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def subset(self, idx: np.ndarray) -> "PointCloud":
        labels = None if self.labels is None else self.labels[idx]
        return PointCloud(self.coords[idx], labels)


class GraphKind(Enum):
    """The deterministic spatial-graph constructions."""
    KNN = "knn"
    EPS = "eps"


@dataclass(frozen=True)
class SpatialGraph:
    """
    Directed, unweighted adjacency over a point cloud.

    `adjacency` is a CSR 0/1 matrix; row i lists the out-edges of vertex i in
    ascending target order.
    """
    adjacency: sp.csr_matrix
    kind: GraphKind
    param: float  # k for KNN, eps for EPS
    points: PointCloud

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def out_edges(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def edges(self) -> List[Tuple[int, int]]:
        coo = self.adjacency.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist()))


# =============================================================================
# Embeddings
# =============================================================================

DEFAULT_THETA = 50.0


@dataclass
class EmbeddingModel:
    """
    Word vectors x_i, context vectors c_j, row/column biases a_i, b_j and the
    negative-binomial dispersion theta.

    The rate of pair (i, j) is exp(-||x_i - c_j||^2 / 2 + a_i + b_j).
    """
    word_vecs: np.ndarray
    ctx_vecs: np.ndarray
    row_bias: np.ndarray
    col_bias: np.ndarray
    theta: float = DEFAULT_THETA

    def __post_init__(self):
        if self.word_vecs.shape != self.ctx_vecs.shape:
            raise ValueError("word and context matrices must have equal shape")
        if self.word_vecs.ndim != 2 or self.word_vecs.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")

    @property
    def n(self) -> int:
        return self.word_vecs.shape[0]

    @property
    def dim(self) -> int:
        return self.word_vecs.shape[1]

    def vectors(self) -> np.ndarray:
        """Output vectors: the average of word and context vectors."""
        return (self.word_vecs + self.ctx_vecs) / 2.0

    def is_finite(self) -> bool:
        return all(
            np.all(np.isfinite(a))
            for a in (self.word_vecs, self.ctx_vecs, self.row_bias, self.col_bias)
        )

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(
            self.word_vecs.copy(), self.ctx_vecs.copy(),
            self.row_bias.copy(), self.col_bias.copy(), self.theta,
        )

    @classmethod
    def from_vectors(cls, vectors: np.ndarray, ctx: Optional[np.ndarray] = None) -> "EmbeddingModel":
        """Wrap closed-form vectors (spectral methods): no biases."""
        vectors = np.asarray(vectors, dtype=np.float64)
        n = vectors.shape[0]
        ctx = vectors.copy() if ctx is None else np.asarray(ctx, dtype=np.float64)
        return cls(vectors, ctx, np.zeros(n), np.zeros(n))


@dataclass(frozen=True)
class WordVectors:
    """Output vectors keyed by word, rows in frequency order."""
    words: Tuple[str, ...]
    vectors: np.ndarray
    index: Dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if len(self.words) != self.vectors.shape[0]:
            raise ValueError("one vector per word required")
        if not self.index:
            object.__setattr__(self, "index", {w: i for i, w in enumerate(self.words)})

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[self.index[word]]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def normalized(self) -> "WordVectors":
        """Unit-normalized copy; zero vectors stay zero."""
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        safe = np.where(norms > 0, norms, 1.0)
        return WordVectors(self.words, self.vectors / safe, self.index)

    @classmethod
    def from_model(cls, model: EmbeddingModel, vocab: Vocabulary) -> "WordVectors":
        return cls(tuple(vocab.words), model.vectors())


# =============================================================================
# Evaluation items and reports
# =============================================================================

class ItemKind(Enum):
    ANALOGY = "analogy"
    SAT = "sat"
    SEQUENCE = "sequence"
    CLASSIFICATION = "classification"


@dataclass(frozen=True)
class EvalItem:
    """
    One inductive-reasoning question.

    - analogy: query = (a, b, c), answer = d, open vocabulary
    - sat: query = (A, B), pairs = five (C, D) options, answer = option index
    - sequence: query = (w1..wn), choices optional, answer = word
    - classification: query = (w1..wn), choices, answer = word
    """
    kind: ItemKind
    query: Tuple[str, ...]
    answer: object
    choices: Optional[Tuple[str, ...]] = None
    pairs: Optional[Tuple[Tuple[str, str], ...]] = None
    section: str = ""

    def __post_init__(self):
        if self.answer is None or self.answer == "":
            raise ValueError("evaluation item requires an answer")
        if self.kind is ItemKind.SAT and not self.pairs:
            raise ValueError("SAT item requires candidate pairs")
        if self.kind is ItemKind.CLASSIFICATION and not self.choices:
            raise ValueError("classification item requires choices")

    @property
    def open_vocabulary(self) -> bool:
        return self.kind is ItemKind.ANALOGY or (
            self.kind is ItemKind.SEQUENCE and not self.choices
        )

    def words(self) -> List[str]:
        """Every word the item needs to be answerable."""
        out = list(self.query)
        if self.choices:
            out.extend(self.choices)
        if self.pairs:
            for c, d in self.pairs:
                out.extend([c, d])
        if isinstance(self.answer, str):
            out.append(self.answer)
        return out


@dataclass
class SectionReport:
    correct: int = 0
    correct_top_k: int = 0
    covered: int = 0
    total: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.covered if self.covered else 0.0

    @property
    def top_k_accuracy(self) -> float:
        return self.correct_top_k / self.covered if self.covered else 0.0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "top_k_accuracy": self.top_k_accuracy,
            "covered": self.covered,
            "total": self.total,
        }


@dataclass
class EvalReport:
    """
    Accuracy over covered items, with coverage reported separately.

    When nothing is covered the accuracy is reported as 0 and `undefined`
    is set, never NaN.
    """
    accuracy: float
    covered: int
    total: int
    metric: str
    k: int
    top_k_accuracy: Optional[float] = None
    sections: Dict[str, SectionReport] = field(default_factory=dict)

    @property
    def undefined(self) -> bool:
        return self.covered == 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "covered": self.covered,
            "total": self.total,
            "undefined": self.undefined,
            "top_k_accuracy": self.top_k_accuracy,
            "metric": self.metric,
            "k": self.k,
            "sections": {name: s.to_dict() for name, s in sorted(self.sections.items())},
        }
