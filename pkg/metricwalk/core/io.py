"""
metricwalk File Formats

Readers and writers for every artifact the pipelines exchange:

    corpus        one sentence per line, whitespace tokens
    vocabulary    "word<TAB>count" per line, frequency order
    counts        header "n W mode m", then "i j value" per stored entry
    points        header "n d", then d coordinates (+ optional int label)
    embeddings    header "n d", then "token v1 ... vd" (word2vec text)
    MNIST         IDX image/label files, optionally gzip-compressed
    tasks         Google/MSR analogies, SAT blocks, seq/cls TSV
    reports       JSON with sorted keys
"""

from __future__ import annotations

import gzip
import json
import logging
import re
import struct
from pathlib import Path
from typing import IO, Iterator, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .cooccur import tokenize
from .schemas import (
    CooccurrenceCounts,
    EmbeddingModel,
    EvalItem,
    FormatError,
    ItemKind,
    PointCloud,
    Vocabulary,
    Weighting,
    WordVectors,
)

logger = logging.getLogger("metricwalk.io")

PathLike = Union[str, Path]

_IDX_IMAGES = 2051
_IDX_LABELS = 2049


def _fmt(value: float) -> str:
    return "%.17g" % value


def _open_text(path: PathLike, mode: str = "r") -> IO[str]:
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8", newline="\n" if "w" in mode else None)


# =============================================================================
# Corpus and vocabulary
# =============================================================================

def read_corpus(path: PathLike, lowercase: bool = False, strip: bool = False) -> Iterator[List[str]]:
    """Yield one token list per non-empty line."""
    with _open_text(path) as f:
        for line in f:
            tokens = tokenize(line, lowercase=lowercase, strip=strip)
            if tokens:
                yield tokens


def write_vocab(path: PathLike, vocab: Vocabulary):
    with _open_text(path, "w") as f:
        for word, count in zip(vocab.words, vocab.counts):
            f.write(f"{word}\t{count}\n")


def read_vocab(path: PathLike) -> Vocabulary:
    words, counts = [], []
    with _open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'word<TAB>count'")
            try:
                counts.append(int(parts[1]))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: count {parts[1]!r} is not an integer")
            words.append(parts[0])
    return Vocabulary(words=tuple(words), counts=tuple(counts))


# =============================================================================
# Counts
# =============================================================================

def write_counts(path: PathLike, counts: CooccurrenceCounts):
    """Stored entries in row-major order; symmetric modes store the upper triangle."""
    coo = counts.entries.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with _open_text(path, "w") as f:
        f.write(f"{counts.vocab_size} {counts.window} {counts.weighting.value} {coo.nnz}\n")
        for k in order:
            f.write(f"{coo.row[k]} {coo.col[k]} {_fmt(coo.data[k])}\n")


def read_counts(path: PathLike, total_tokens: int = 0) -> CooccurrenceCounts:
    with _open_text(path) as f:
        header = f.readline().split()
        if len(header) != 4:
            raise FormatError(f"{path}: header must be 'n W mode m', got {' '.join(header)!r}")
        try:
            n, window, m = int(header[0]), int(header[1]), int(header[3])
            weighting = Weighting(header[2])
        except ValueError as e:
            raise FormatError(f"{path}: bad header: {e}")
        data = np.loadtxt(f, ndmin=2) if m else np.empty((0, 3))
    if data.shape[0] != m or (m and data.shape[1] != 3):
        raise FormatError(f"{path}: header declares {m} entries, found {data.shape[0]}")
    rows = data[:, 0].astype(np.int64)
    cols = data[:, 1].astype(np.int64)
    if m and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise FormatError(f"{path}: index outside 0..{n - 1}")
    if weighting.symmetric and np.any(rows > cols):
        raise FormatError(f"{path}: symmetric counts must store the upper triangle only")
    entries = sp.csr_matrix((data[:, 2], (rows, cols)), shape=(n, n))
    entries.sort_indices()
    return CooccurrenceCounts(
        entries=entries, vocab_size=n, window=window,
        weighting=weighting, total_tokens=total_tokens,
    )


# =============================================================================
# Point clouds
# =============================================================================

def write_points(path: PathLike, points: PointCloud):
    with _open_text(path, "w") as f:
        f.write(f"{points.n} {points.dim}\n")
        for i in range(points.n):
            row = " ".join(_fmt(v) for v in points.coords[i])
            if points.labels is not None:
                row += f" {int(points.labels[i])}"
            f.write(row + "\n")


def read_points(path: PathLike) -> PointCloud:
    """Coordinates with an optional trailing integer label column."""
    with _open_text(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: header must be 'n d'")
        n, d = int(header[0]), int(header[1])
        data = np.loadtxt(f, ndmin=2)
    if data.shape[0] != n or data.shape[1] not in (d, d + 1):
        raise FormatError(f"{path}: expected {n} rows of {d} (or {d + 1}) values, got {data.shape}")
    labels = data[:, d].astype(np.int64) if data.shape[1] == d + 1 else None
    return PointCloud(coords=data[:, :d], labels=labels)


# =============================================================================
# MNIST IDX
# =============================================================================

def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    with open(path, "rb") as f:
        head = f.read(2)
    opener = gzip.open if head == b"\x1f\x8b" else open
    with opener(path, "rb") as f:
        return f.read()


def read_idx(path: PathLike) -> np.ndarray:
    """uint8 array from an IDX1 (labels) or IDX3 (images) file."""
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise FormatError(f"{path}: too short for an IDX header")
    magic, count = struct.unpack(">II", raw[:8])
    if magic == _IDX_LABELS:
        shape: Tuple[int, ...] = (count,)
        offset = 8
    elif magic == _IDX_IMAGES:
        if len(raw) < 16:
            raise FormatError(f"{path}: too short for an IDX3 header")
        rows, cols = struct.unpack(">II", raw[8:16])
        shape = (count, rows, cols)
        offset = 16
    else:
        raise FormatError(f"{path}: unknown IDX magic number {magic}")
    size = int(np.prod(shape))
    if len(raw) - offset < size:
        raise FormatError(f"{path}: truncated ({len(raw) - offset} of {size} bytes)")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=offset).reshape(shape)


def load_mnist(images: PathLike, labels: PathLike) -> PointCloud:
    """Flattened images scaled to [0, 1] with digit labels."""
    X = read_idx(images)
    y = read_idx(labels)
    if X.ndim != 3 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise FormatError(f"image/label files disagree: {X.shape} vs {y.shape}")
    return PointCloud(coords=X.reshape(X.shape[0], -1).astype(np.float64) / 255.0, labels=y.astype(np.int64))


def find_mnist(directory: PathLike, split: str = "train") -> Optional[Tuple[Path, Path]]:
    """Locate the standard IDX file pair (plain or .gz) in a directory."""
    directory = Path(directory)
    prefix = "train" if split == "train" else "t10k"
    for suffix in ("", ".gz"):
        img = directory / f"{prefix}-images-idx3-ubyte{suffix}"
        lab = directory / f"{prefix}-labels-idx1-ubyte{suffix}"
        if img.exists() and lab.exists():
            return img, lab
    return None


# =============================================================================
# Embeddings
# =============================================================================

def write_embedding(path: PathLike, words, vectors: np.ndarray):
    """word2vec text format."""
    vectors = np.asarray(vectors)
    with _open_text(path, "w") as f:
        f.write(f"{vectors.shape[0]} {vectors.shape[1]}\n")
        for word, vec in zip(words, vectors):
            f.write(word + " " + " ".join(_fmt(v) for v in vec) + "\n")


def read_embedding(path: PathLike) -> WordVectors:
    words: List[str] = []
    rows: List[np.ndarray] = []
    with _open_text(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: header must be 'n d'")
        n, d = int(header[0]), int(header[1])
        for lineno, line in enumerate(f, 2):
            parts = line.rstrip().split(" ")
            if len(parts) != d + 1:
                raise FormatError(f"{path}:{lineno}: expected a token and {d} values")
            words.append(parts[0])
            rows.append(np.asarray(parts[1:], dtype=np.float64))
    if len(words) != n:
        raise FormatError(f"{path}: header declares {n} vectors, found {len(words)}")
    vectors = np.stack(rows) if rows else np.zeros((0, d))
    return WordVectors(words=tuple(words), vectors=vectors)


def write_model(out_dir: PathLike, model: EmbeddingModel, words) -> List[Path]:
    """Output vectors, raw context vectors and biases; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "vectors.txt", out / "context.txt", out / "biases.tsv"]
    write_embedding(paths[0], words, model.vectors())
    write_embedding(paths[1], words, model.ctx_vecs)
    with _open_text(paths[2], "w") as f:
        f.write(f"# theta={_fmt(model.theta)}\n")
        for word, a, b in zip(words, model.row_bias, model.col_bias):
            f.write(f"{word}\t{_fmt(a)}\t{_fmt(b)}\n")
    return paths


# =============================================================================
# Evaluation tasks
# =============================================================================

def read_google(path: PathLike, lowercase: bool = False) -> List[EvalItem]:
    """Analogy questions 'A B C D' under ': section' headers (Google and MSR sets)."""
    items: List[EvalItem] = []
    section = ""
    with _open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(":"):
                section = line[1:].strip()
                continue
            words = line.lower().split() if lowercase else line.split()
            if len(words) != 4:
                raise FormatError(f"{path}:{lineno}: analogy lines need 4 words")
            items.append(EvalItem(
                kind=ItemKind.ANALOGY, query=tuple(words[:3]), answer=words[3], section=section,
            ))
    return items


def read_sat(path: PathLike, lowercase: bool = False) -> List[EvalItem]:
    """Blocks of: exemplar 'A B', five 'C D' options, 'ans <1-5>'."""
    text = Path(path).read_text(encoding="utf-8")
    if lowercase:
        text = text.lower()
    items: List[EvalItem] = []
    for block_no, block in enumerate(re.split(r"\n\s*\n", text.strip()), 1):
        lines = [ln.strip() for ln in block.strip().splitlines() if ln.strip()]
        if len(lines) != 7:
            raise FormatError(f"{path}: SAT block {block_no} has {len(lines)} lines, expected 7")
        pairs = [tuple(ln.split()) for ln in lines[:6]]
        if any(len(p) != 2 for p in pairs):
            raise FormatError(f"{path}: SAT block {block_no}: pair lines need 2 words")
        ans = lines[6].split()
        if len(ans) != 2 or ans[0] != "ans" or not ans[1].isdigit() or not 1 <= int(ans[1]) <= 5:
            raise FormatError(f"{path}: SAT block {block_no}: bad answer line {lines[6]!r}")
        items.append(EvalItem(
            kind=ItemKind.SAT, query=pairs[0], answer=int(ans[1]) - 1,
            pairs=tuple(pairs[1:]), section="sat",
        ))
    return items


def read_tsv_tasks(path: PathLike, lowercase: bool = False) -> List[EvalItem]:
    """
    Sequence and classification items:

        seq<TAB>w1,...,wn[<TAB>c1|...|cm]<TAB>answer
        cls<TAB>w1,...,wn<TAB>c1|...|cm<TAB>answer
    """
    items: List[EvalItem] = []
    kinds = {"seq": ItemKind.SEQUENCE, "cls": ItemKind.CLASSIFICATION}
    with _open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if lowercase:
                line = line.lower()
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if cols[0] not in kinds or len(cols) not in (3, 4):
                raise FormatError(f"{path}:{lineno}: expected seq/cls with 3 or 4 columns")
            kind = kinds[cols[0]]
            query = tuple(w for w in cols[1].split(",") if w)
            choices = tuple(c for c in cols[2].split("|") if c) if len(cols) == 4 else None
            if kind is ItemKind.CLASSIFICATION and not choices:
                raise FormatError(f"{path}:{lineno}: classification items need choices")
            answer = cols[-1]
            if choices and answer not in choices:
                raise FormatError(f"{path}:{lineno}: answer {answer!r} is not among the choices")
            items.append(EvalItem(
                kind=kind, query=query, answer=answer, choices=choices, section=cols[0],
            ))
    return items


TASK_READERS = {
    "google": read_google,
    "sat": read_sat,
    "tsv": read_tsv_tasks,
}


def read_tasks(path: PathLike, fmt: str, lowercase: bool = False) -> List[EvalItem]:
    if fmt not in TASK_READERS:
        raise FormatError(f"unknown task format {fmt!r} (expected one of {sorted(TASK_READERS)})")
    return TASK_READERS[fmt](path, lowercase=lowercase)


# =============================================================================
# Reports
# =============================================================================

def write_json(path: PathLike, data: dict):
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    with _open_text(path, "w") as f:
        f.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
