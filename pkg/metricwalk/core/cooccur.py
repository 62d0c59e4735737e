"""
metricwalk Co-occurrence Counting

Builds vocabularies from token streams and accumulates windowed,
distance-weighted, symmetrized co-occurrence counts:

    C_ij = sum_{t=1..W} w(t) * (C^t_ij + C^t_ji)

where C^t_ij is the number of times token j appears exactly t positions after
token i inside one sentence. Out-of-vocabulary tokens are dropped before
windowing, so distances are measured over kept tokens.

Per-lag counts are accumulated as integers and only combined with w(t) at the
end, which makes the result independent of sentence order.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from typing import Iterable, List, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .schemas import CooccurrenceCounts, MetricWalkError, Vocabulary, Weighting

logger = logging.getLogger("metricwalk.cooccur")

Sentence = Union[Sequence[str], np.ndarray]

# Tokens buffered before a flush into the sparse per-lag accumulators.
_FLUSH_TOKENS = 2_000_000

_STRIP_RE = re.compile(r"[^\w\s]|[\d_]", re.UNICODE)


class EmptyVocabularyError(MetricWalkError):
    """No token survived the frequency filter."""
    pass


class CountsMismatchError(MetricWalkError):
    """Two count objects disagree on vocabulary size, window or weighting."""
    pass


# =============================================================================
# Tokenization and vocabulary
# =============================================================================

def tokenize(line: str, lowercase: bool = False, strip: bool = False) -> List[str]:
    """
    Whitespace tokenizer.

    `strip` removes punctuation and digits, `lowercase` folds case; together
    they reproduce the corpus preprocessing used for the large-scale runs.
    """
    if lowercase:
        line = line.lower()
    if strip:
        line = _STRIP_RE.sub(" ", line)
    return line.split()


def build_vocabulary(tokens: Iterable[str], max_size: int, min_count: int = 0) -> Vocabulary:
    """
    Count tokens and keep the `max_size` most frequent ones with count >= min_count.

    Order: descending count, ties broken lexicographically.
    """
    if max_size < 1:
        raise ValueError(f"max_size must be >= 1, got {max_size}")
    if min_count < 0:
        raise ValueError(f"min_count must be >= 0, got {min_count}")

    counter = Counter(tokens)
    kept = [(w, c) for w, c in counter.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(
            f"no token has count >= {min_count} ({len(counter)} distinct tokens seen)"
        )
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    kept = kept[:max_size]
    logger.info("vocabulary: %d of %d distinct tokens kept", len(kept), len(counter))
    return Vocabulary(words=tuple(w for w, _ in kept), counts=tuple(c for _, c in kept))


# =============================================================================
# Window weights
# =============================================================================

def window_weights(window: int, weighting: Weighting) -> np.ndarray:
    """w(1..W), normalized to sum to one over the finite window."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    t = np.arange(1, window + 1, dtype=np.float64)
    if weighting is Weighting.HARMONIC:
        inv = 1.0 / t
        return inv / inv.sum()
    if weighting is Weighting.UNIFORM:
        return np.full(window, 1.0 / window)
    # raw transitions use only t = 1 with unit weight
    out = np.zeros(window)
    out[0] = 1.0
    return out


# =============================================================================
# Counting
# =============================================================================

class _LagAccumulator:
    """Integer-valued per-lag count matrices C^t, t = 1..W."""

    def __init__(self, n: int, lags: int):
        self.n = n
        self.lags = lags
        self.totals = [sp.csr_matrix((n, n), dtype=np.float64) for _ in range(lags)]
        self._ids: List[np.ndarray] = []
        self._buffered = 0
        self.tokens = 0

    def add(self, ids: np.ndarray):
        if ids.size == 0:
            return
        self._ids.append(ids)
        self._buffered += ids.size
        self.tokens += ids.size
        if self._buffered >= _FLUSH_TOKENS:
            self.flush()

    def flush(self):
        if not self._ids:
            return
        ids = np.concatenate(self._ids)
        sid = np.concatenate([np.full(a.size, k, dtype=np.int64) for k, a in enumerate(self._ids)])
        for t in range(1, self.lags + 1):
            if ids.size <= t:
                break
            same = sid[:-t] == sid[t:]
            left = ids[:-t][same]
            right = ids[t:][same]
            if left.size == 0:
                continue
            block = sp.coo_matrix(
                (np.ones(left.size), (left, right)), shape=(self.n, self.n)
            ).tocsr()
            self.totals[t - 1] = self.totals[t - 1] + block
        self._ids = []
        self._buffered = 0


def _as_ids(sentence: Sentence, vocab: Vocabulary) -> np.ndarray:
    if isinstance(sentence, np.ndarray) and np.issubdtype(sentence.dtype, np.integer):
        ids = sentence.astype(np.int64, copy=False)
        keep = (ids >= 0) & (ids < len(vocab))
        return ids[keep]
    return vocab.encode(list(sentence))


def count_cooccurrences(
    sentences: Iterable[Sentence],
    vocab: Vocabulary,
    window: int = 5,
    weighting: Weighting = Weighting.HARMONIC,
) -> CooccurrenceCounts:
    """
    Accumulate weighted, windowed counts over a stream of sentences.

    Sentences are token lists (mapped through `vocab`) or integer id arrays
    (walk output). Windows never cross sentence boundaries.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    n = len(vocab)
    lags = 1 if weighting is Weighting.RAW else window
    acc = _LagAccumulator(n, lags)
    for sentence in sentences:
        acc.add(_as_ids(sentence, vocab))
    acc.flush()

    if weighting is Weighting.RAW:
        entries = acc.totals[0]
    else:
        w = window_weights(window, weighting)
        full = sp.csr_matrix((n, n), dtype=np.float64)
        for t in range(lags):
            ct = acc.totals[t]
            full = full + w[t] * (ct + ct.T)
        entries = sp.triu(full, format="csr")
    entries = sp.csr_matrix(entries, dtype=np.float64)
    entries.eliminate_zeros()
    entries.sort_indices()
    logger.info(
        "counted %d tokens: %d stored pairs (window=%d, %s)",
        acc.tokens, entries.nnz, window, weighting.value,
    )
    return CooccurrenceCounts(
        entries=entries,
        vocab_size=n,
        window=window,
        weighting=weighting,
        total_tokens=acc.tokens,
    )


def merge_counts(a: CooccurrenceCounts, b: CooccurrenceCounts) -> CooccurrenceCounts:
    """Entrywise sum of two shards counted with identical settings."""
    if a.metadata_key() != b.metadata_key():
        raise CountsMismatchError(
            f"cannot merge counts with (n, W, mode) = "
            f"({a.vocab_size}, {a.window}, {a.weighting.value}) and "
            f"({b.vocab_size}, {b.window}, {b.weighting.value})"
        )
    entries = sp.csr_matrix(a.entries + b.entries)
    entries.eliminate_zeros()
    entries.sort_indices()
    return CooccurrenceCounts(
        entries=entries,
        vocab_size=a.vocab_size,
        window=a.window,
        weighting=a.weighting,
        total_tokens=a.total_tokens + b.total_tokens,
    )


def counts_from_matrix(
    matrix,
    weighting: Weighting = Weighting.RAW,
    window: int = 1,
    total_tokens: int = 0,
) -> CooccurrenceCounts:
    """
    Wrap a dense or sparse count matrix (planted experiments, survey graphs).

    Symmetric weightings require a symmetric matrix and keep its upper triangle.
    """
    m = sp.csr_matrix(matrix, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"count matrix must be square, got {m.shape}")
    if m.nnz and m.data.min() < 0:
        raise ValueError("counts must be non-negative")
    if weighting.symmetric:
        if abs(m - m.T).sum() > 1e-12 * max(1.0, abs(m).sum()):
            raise ValueError("symmetric weighting requires a symmetric matrix")
        m = sp.triu(m, format="csr")
    m.eliminate_zeros()
    m.sort_indices()
    return CooccurrenceCounts(
        entries=m,
        vocab_size=m.shape[0],
        window=window,
        weighting=weighting,
        total_tokens=total_tokens,
    )
