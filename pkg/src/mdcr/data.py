"""Paired image/text feature data: matrix I/O, labels, preprocessing and synthesis.

Matrices are plain ``float64`` numpy arrays (rows = instances). Two on-disk
formats are supported:

* text: a ``"<rows> <cols>"`` header line followed by one line per row of
  space separated decimals;
* binary: the 8 byte magic ``MDCRMAT1``, rows and cols as little-endian
  uint64, then ``rows * cols`` little-endian float64 values in row-major order.
"""
from __future__ import annotations

import io
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Optional, Sequence, Tuple, Union

import numpy as np

MAGIC = b"MDCRMAT1"
_HEADER = struct.Struct("<8sQQ")

PathLike = Union[str, os.PathLike]


class MatrixFormatError(ValueError):
    """A matrix or label file does not conform to its declared format."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def check_features(m, name: str = "features") -> np.ndarray:
    """Return ``m`` as a 2-D float64 array, rejecting empty or non-finite input."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D matrix, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name}: matrix must have at least one row and one column, got {a.shape}")
    bad = np.argwhere(~np.isfinite(a))
    if len(bad):
        r, c = bad[0]
        raise ValueError(f"{name}: non-finite value {a[r, c]!r} at row {r}, column {c}")
    return a


def check_labels(labels, n_classes: Optional[int] = None, name: str = "labels") -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ValueError(f"{name}: expected a 1-D label vector, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError(f"{name}: labels must be integers")
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        i = int(np.argmin(y))
        raise ValueError(f"{name}: negative label {y[i]} at position {i}")
    if n_classes is not None and y.size and y.max() >= n_classes:
        i = int(np.argmax(y))
        raise ValueError(f"{name}: label {y[i]} at position {i} out of range [0, {n_classes})")
    return y


# ---------------------------------------------------------------------------
# matrix files
# ---------------------------------------------------------------------------

def _format_for(path: PathLike, fmt: Optional[str]) -> str:
    if fmt is not None:
        if fmt not in ("text", "binary"):
            raise ValueError(f"unknown matrix format {fmt!r}; expected 'text' or 'binary'")
        return fmt
    return "text" if Path(path).suffix.lower() in (".txt", ".tsv", ".dat") else "binary"


def write_matrix_binary(fh: BinaryIO, m: np.ndarray) -> None:
    a = check_features(m, "matrix")
    fh.write(_HEADER.pack(MAGIC, a.shape[0], a.shape[1]))
    fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_matrix_binary(fh: BinaryIO, source: str = "<stream>") -> np.ndarray:
    head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise MatrixFormatError(f"{source}: truncated header ({len(head)} of {_HEADER.size} bytes)")
    magic, rows, cols = _HEADER.unpack(head)
    if magic != MAGIC:
        raise MatrixFormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if rows < 1 or cols < 1:
        raise MatrixFormatError(f"{source}: header declares empty matrix {rows}x{cols}")
    want = rows * cols * 8
    payload = fh.read(want)
    if len(payload) < want:
        got = len(payload) // 8
        raise MatrixFormatError(
            f"{source}: truncated payload, expected {rows}x{cols} values but data ends "
            f"at row {got // cols}, column {got % cols}"
        )
    a = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)
    bad = np.argwhere(~np.isfinite(a))
    if len(bad):
        r, c = bad[0]
        raise MatrixFormatError(f"{source}: non-finite value at row {r}, column {c}")
    return a


def _parse_text_matrix(text: str, source: str) -> np.ndarray:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MatrixFormatError(f"{source}: empty file")
    head = lines[0].split()
    if len(head) != 2 or not all(tok.isdigit() for tok in head):
        raise MatrixFormatError(f"{source}: line 1: expected header '<rows> <cols>', got {lines[0]!r}")
    rows, cols = int(head[0]), int(head[1])
    if rows < 1 or cols < 1:
        raise MatrixFormatError(f"{source}: header declares empty matrix {rows}x{cols}")
    body = lines[1:]
    if len(body) < rows:
        raise MatrixFormatError(f"{source}: truncated file, header declares {rows} rows but found {len(body)}")
    if any(line.strip() for line in body[rows:]):
        raise MatrixFormatError(f"{source}: more than the declared {rows} rows")
    out = np.empty((rows, cols), dtype=np.float64)
    for r in range(rows):
        toks = body[r].split()
        if len(toks) != cols:
            raise MatrixFormatError(
                f"{source}: row {r} (line {r + 2}) has {len(toks)} values, header declares {cols}"
            )
        for c, tok in enumerate(toks):
            try:
                v = float(tok)
            except ValueError:
                raise MatrixFormatError(f"{source}: row {r}, column {c}: cannot parse {tok!r}") from None
            if not math.isfinite(v):
                raise MatrixFormatError(f"{source}: non-finite value {tok!r} at row {r}, column {c}")
            out[r, c] = v
    return out


def save_matrix(path: PathLike, m, fmt: Optional[str] = None) -> None:
    """Write ``m`` to ``path``; the format is inferred from the suffix unless given."""
    a = check_features(m, "matrix")
    if _format_for(path, fmt) == "binary":
        with open(path, "wb") as fh:
            write_matrix_binary(fh, a)
        return
    buf = io.StringIO()
    buf.write(f"{a.shape[0]} {a.shape[1]}\n")
    for row in a:
        buf.write(" ".join(repr(float(v)) for v in row))
        buf.write("\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())


def load_matrix(path: PathLike, fmt: Optional[str] = None) -> np.ndarray:
    """Read a matrix in text or binary format.

    Raises:
        MatrixFormatError: on header mismatch, truncation or non-finite values.
            The message names the offending row/column.
    """
    source = str(path)
    if _format_for(path, fmt) == "binary":
        with open(path, "rb") as fh:
            a = read_matrix_binary(fh, source)
            if fh.read(1):
                raise MatrixFormatError(f"{source}: trailing bytes after declared payload")
            return a
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_text_matrix(fh.read(), source)


def load_labels(path: PathLike) -> np.ndarray:
    """One integer label per line."""
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for i, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise MatrixFormatError(f"{path}: line {i}: not an integer label: {s!r}") from None
    if not out:
        raise MatrixFormatError(f"{path}: no labels")
    return np.asarray(out, dtype=np.int64)


def save_labels(path: PathLike, labels) -> None:
    y = check_labels(labels)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.writelines(f"{int(v)}\n" for v in y)


# ---------------------------------------------------------------------------
# labels and semantic matrix
# ---------------------------------------------------------------------------

def remap_labels(raw: Sequence) -> Tuple[np.ndarray, np.ndarray]:
    """Map arbitrary hashable labels onto contiguous ids ``0..c-1``.

    Returns ``(ids, classes)`` with ``classes[ids] == raw``; classes are sorted.
    """
    classes, ids = np.unique(np.asarray(raw), return_inverse=True)
    return ids.astype(np.int64).ravel(), classes


def build_semantic_matrix(labels, n_classes: int) -> np.ndarray:
    """One-hot indicator matrix: row ``i`` is the basis vector ``e_{labels[i]}``."""
    if n_classes < 1:
        raise ValueError(f"n_classes must be >= 1, got {n_classes}")
    y = check_labels(labels, n_classes)
    S = np.zeros((y.size, n_classes), dtype=np.float64)
    S[np.arange(y.size), y] = 1.0
    return S


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZScoreStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(np.asarray(self.mean, dtype=np.float64).ravel()))
        object.__setattr__(self, "std", _frozen(np.asarray(self.std, dtype=np.float64).ravel()))
        if self.mean.shape != self.std.shape:
            raise ValueError("mean and std must have the same length")


def zscore(m, stats: Optional[ZScoreStats] = None) -> Tuple[np.ndarray, ZScoreStats]:
    """Standardize columns; zero-variance columns are only centered.

    Statistics use the population (divide-by-n) standard deviation. Pass the
    stats returned for the training matrix when transforming test data.
    """
    a = check_features(m)
    if stats is None:
        mean = a.mean(axis=0)
        std = a.std(axis=0)
        stats = ZScoreStats(mean, std)
    elif stats.mean.shape[0] != a.shape[1]:
        raise ValueError(f"zscore stats have {stats.mean.shape[0]} columns, matrix has {a.shape[1]}")
    scale = np.where(stats.std > 0, stats.std, 1.0)
    return (a - stats.mean) / scale, stats


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairedDataset:
    """Co-occurring image/text feature rows with one class label per pair.

    Arrays are copied and made read-only on construction.
    """

    images: np.ndarray
    texts: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        X = check_features(self.images, "images")
        T = check_features(self.texts, "texts")
        y = check_labels(self.labels, self.n_classes)
        if not (X.shape[0] == T.shape[0] == y.shape[0]):
            raise ValueError(
                f"row counts differ: images {X.shape[0]}, texts {T.shape[0]}, labels {y.shape[0]}"
            )
        object.__setattr__(self, "images", _frozen(X))
        object.__setattr__(self, "texts", _frozen(T))
        object.__setattr__(self, "labels", _frozen(y))

    @property
    def n_samples(self) -> int:
        return self.images.shape[0]

    def semantic_matrix(self) -> np.ndarray:
        return build_semantic_matrix(self.labels, self.n_classes)

    def subset(self, idx) -> "PairedDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return PairedDataset(self.images[idx], self.texts[idx], self.labels[idx], self.n_classes)


def _class_centers(rng: np.random.Generator, c: int, d: int, sep: float) -> np.ndarray:
    g = rng.standard_normal((d, c))
    if d >= c:
        # orthonormal columns: centers pairwise sep*sqrt(2) apart
        q, _ = np.linalg.qr(g)
        dirs = q.T
    else:
        dirs = g.T / np.linalg.norm(g.T, axis=1, keepdims=True)
    return sep * dirs


def make_synthetic(
    n_classes: int,
    per_class: int,
    p: int,
    q: int,
    sep: float = 10.0,
    noise: float = 0.1,
    seed: int = 0,
) -> PairedDataset:
    """Gaussian blobs around class centers, one set of centers per modality.

    Each class center lies at distance ``sep`` from the origin; instances add
    isotropic Gaussian noise with standard deviation ``noise``. Rows are grouped
    by class. Output is a pure function of the arguments.
    """
    for name, v in (("n_classes", n_classes), ("per_class", per_class), ("p", p), ("q", q)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")
    if sep < 0 or noise < 0:
        raise ValueError("sep and noise must be nonnegative")
    rng = np.random.default_rng(seed)
    img_centers = _class_centers(rng, n_classes, p, sep)
    txt_centers = _class_centers(rng, n_classes, q, sep)
    labels = np.repeat(np.arange(n_classes), per_class)
    X = img_centers[labels] + noise * rng.standard_normal((labels.size, p))
    T = txt_centers[labels] + noise * rng.standard_normal((labels.size, q))
    return PairedDataset(X, T, labels, n_classes)


def split_indices(labels, train_fraction: float, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Stratified train/test index split; both outputs sorted ascending."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie strictly between 0 and 1, got {train_fraction}")
    y = check_labels(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for k in np.unique(y):
        members = np.flatnonzero(y == k)
        if members.size < 2:
            raise ValueError(f"class {k} has {members.size} instance(s); need at least 2 to split")
        members = rng.permutation(members)
        n_train = int(math.floor(train_fraction * members.size + 0.5))
        n_train = min(max(n_train, 1), members.size - 1)
        train.append(members[:n_train])
        test.append(members[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split(dataset: PairedDataset, train_fraction: float, seed: int = 0) -> Tuple[PairedDataset, PairedDataset]:
    train_idx, test_idx = split_indices(dataset.labels, train_fraction, seed)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def load_dataset(images: PathLike, texts: PathLike, labels: PathLike, n_classes: Optional[int] = None) -> PairedDataset:
    X = load_matrix(images)
    T = load_matrix(texts)
    y = load_labels(labels)
    c = int(y.max()) + 1 if n_classes is None else n_classes
    return PairedDataset(X, T, y, c)
