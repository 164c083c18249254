"""Dataset containers, IDX/CSV loaders, normalization, splitting and metrics."""

from __future__ import annotations

import csv
import gzip
import io
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CountMismatchError,
    InvalidInputError,
    ParseError,
    ShapeError,
    TruncatedError,
    WrongMagicError,
)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"


@dataclass
class Dataset:
    """Features ``X`` (d x n, one column per sample) and integer labels in ``[0, c)``."""

    X: np.ndarray
    labels: np.ndarray
    c: int

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.X.ndim != 2:
            raise ShapeError(f"X must be 2-D, got shape {self.X.shape}")
        if self.X.shape[1] != self.labels.size:
            raise ShapeError(f"X has {self.X.shape[1]} samples, labels has {self.labels.size}")
        if self.c < 1:
            raise InvalidInputError("class count must be >= 1")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.c):
            raise InvalidInputError(f"labels must lie in [0, {self.c})")

    @classmethod
    def from_labels(cls, X, labels, c: int | None = None) -> "Dataset":
        labels = np.asarray(labels, dtype=np.int64).ravel()
        if c is None:
            c = int(labels.max()) + 1 if labels.size else 1
        return cls(X, labels, int(c))

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def Y_onehot(self) -> np.ndarray:
        Y = np.zeros((self.c, self.n))
        Y[self.labels, np.arange(self.n)] = 1.0
        return Y

    @property
    def Y_pm(self) -> np.ndarray:
        return 2.0 * self.Y_onehot - 1.0

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[:, idx], self.labels[idx], self.c)


# ---------------------------------------------------------------- IDX

def _read_bytes(source) -> tuple[bytes, str]:
    if isinstance(source, (bytes, bytearray)):
        data, name = bytes(source), "<bytes>"
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
        name = os.fspath(source)
    else:
        data = source.read()
        name = getattr(source, "name", "<stream>")
    if data[:2] == GZIP_MAGIC:
        try:
            data = gzip.decompress(data)
        except (EOFError, OSError) as exc:
            raise TruncatedError(f"{name}: corrupt gzip stream ({exc})") from exc
    return data, name


def _idx_header(data: bytes, name: str, magic: int, ndim: int) -> tuple[int, ...]:
    need = 4 + 4 * ndim
    if len(data) < need:
        raise TruncatedError(f"{name}: header needs {need} bytes, file has {len(data)} (offset {len(data)})")
    (got,) = struct.unpack(">I", data[:4])
    if got != magic:
        raise WrongMagicError(f"{name}: magic 0x{got:08x} at offset 0, expected 0x{magic:08x}")
    return struct.unpack(f">{ndim}I", data[4:need])


def _idx_payload(data: bytes, name: str, offset: int, count: int) -> np.ndarray:
    if len(data) < offset + count:
        raise TruncatedError(
            f"{name}: payload needs {count} bytes from offset {offset}, file ends at offset {len(data)}"
        )
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=offset)


def load_idx(images, labels) -> Dataset:
    """Read an IDX image file (u8, n x rows x cols) and its IDX label file (u8, n).

    Either source may be a path, raw bytes or a binary stream, optionally
    gzip-compressed. Pixels are flattened row-major and divided by 255.
    """
    img, img_name = _read_bytes(images)
    lab, lab_name = _read_bytes(labels)
    n_img, rows, cols = _idx_header(img, img_name, IDX_IMAGES_MAGIC, 3)
    (n_lab,) = _idx_header(lab, lab_name, IDX_LABELS_MAGIC, 1)
    if n_img != n_lab:
        raise CountMismatchError(
            f"{img_name} holds {n_img} images but {lab_name} holds {n_lab} labels"
        )
    d = rows * cols
    pixels = _idx_payload(img, img_name, 16, n_img * d).reshape(n_img, d)
    y = _idx_payload(lab, lab_name, 8, n_lab).astype(np.int64)
    X = pixels.T.astype(np.float64) / 255.0
    c = max(int(y.max()) + 1, 2) if y.size else 2
    return Dataset(X, y, c)


# ---------------------------------------------------------------- CSV

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(source, label_col: int | str = 0, header: bool | None = None) -> Dataset:
    """Read a numeric table with one sample per row.

    ``label_col`` is a column index (negative counts from the end) or, when a
    header row is present, a column name. ``header=None`` treats the first
    row as a header iff one of its cells is not a number. Labels must be
    integers; they are remapped to ``0..c-1`` in sorted order.
    """
    if isinstance(source, (str, os.PathLike)):
        name = os.fspath(source)
        with open(source, newline="") as fh:
            rows = [r for r in csv.reader(fh)]
    else:
        name = getattr(source, "name", "<stream>")
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode()
        rows = list(csv.reader(io.StringIO(text)))
    # blank lines (including a trailing newline) carry no samples
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(cell.strip() for cell in r)]
    if not numbered:
        raise ParseError(f"{name}: no rows")
    if header is None:
        header = not all(_is_number(cell) for cell in numbered[0][1])
    names = None
    if header:
        names = [cell.strip() for cell in numbered[0][1]]
        numbered = numbered[1:]
    if not numbered:
        raise ParseError(f"{name}: header but no data rows")
    width = len(names) if names is not None else len(numbered[0][1])

    if isinstance(label_col, str) and not label_col.lstrip("-").isdigit():
        if names is None or label_col not in names:
            raise ParseError(f"{name}: unknown label column {label_col!r}")
        col = names.index(label_col)
    else:
        col = int(label_col)
        if not -width <= col < width:
            raise ParseError(f"{name}: label column {col} out of range for {width} columns")
        col %= width

    table = np.empty((len(numbered), width))
    for k, (lineno, row) in enumerate(numbered):
        if len(row) != width:
            raise ParseError(f"{name}: row {lineno} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            try:
                table[k, j] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{name}: row {lineno}, column {j + 1}: non-numeric cell {cell!r}"
                ) from None
    if not np.all(np.isfinite(table)):
        raise ParseError(f"{name}: NaN or Inf in table")
    raw = table[:, col]
    if not np.all(raw == np.round(raw)):
        raise ParseError(f"{name}: labels in column {col} must be integers")
    classes, y = np.unique(raw.astype(np.int64), return_inverse=True)
    X = np.delete(table, col, axis=1).T
    if X.shape[0] == 0:
        raise ParseError(f"{name}: no feature columns")
    return Dataset(X, y, max(len(classes), 1))


# ------------------------------------------------------ preprocessing

def normalize_rows(ds: Dataset, reference: Dataset | None = None) -> Dataset:
    """Min-max scale every feature (row of ``X``) to [0, 1].

    Statistics come from ``reference`` when given (e.g. the training part,
    to keep test data out of them) and from ``ds`` otherwise. Constant rows
    map to 0 and values outside the reference range are clipped.
    """
    ref = ds if reference is None else reference
    if ref.d != ds.d:
        raise ShapeError(f"reference has {ref.d} features, data has {ds.d}")
    lo = ref.X.min(axis=1, keepdims=True)
    span = ref.X.max(axis=1, keepdims=True) - lo
    safe = np.where(span > 0, span, 1.0)
    X = np.where(span > 0, (ds.X - lo) / safe, 0.0)
    return Dataset(np.clip(X, 0.0, 1.0), ds.labels.copy(), ds.c)


def _class_quotas(counts: np.ndarray, fraction: float) -> np.ndarray:
    # largest-remainder apportionment of round(n * fraction) training slots,
    # keeping at least one sample of every class with >= 2 members on each side
    n = counts.sum()
    target = min(max(int(round(n * fraction)), 1), n - 1)
    ideal = counts * fraction
    lower = np.where(counts >= 2, 1, 0)
    upper = np.where(counts >= 2, counts - 1, counts)
    quota = np.clip(np.floor(ideal).astype(np.int64), lower, upper)
    while quota.sum() < target:
        room = quota < upper
        if not room.any():
            break
        gap = np.where(room, ideal - quota, -np.inf)
        quota[int(np.argmax(gap))] += 1
    while quota.sum() > target:
        room = quota > lower
        if not room.any():
            break
        gap = np.where(room, ideal - quota, np.inf)
        quota[int(np.argmin(gap))] -= 1
    return quota


def split(ds: Dataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded stratified split into (train, test).

    Every class is shuffled independently and cut according to its quota;
    the two parts are then shuffled once more so classes are interleaved.
    """
    if not 0.0 < train_fraction < 1.0:
        raise InvalidInputError(f"train fraction must lie in (0, 1), got {train_fraction}")
    if ds.n < 2:
        raise InvalidInputError("at least two samples are required to split")
    rng = np.random.default_rng(seed)
    counts = np.bincount(ds.labels, minlength=ds.c)
    quota = _class_quotas(counts, train_fraction)
    train_idx, test_idx = [], []
    for k in range(ds.c):
        members = rng.permutation(np.flatnonzero(ds.labels == k))
        train_idx.append(members[: quota[k]])
        test_idx.append(members[quota[k]:])
    tr = rng.permutation(np.concatenate(train_idx))
    te = rng.permutation(np.concatenate(test_idx))
    return ds.subset(tr), ds.subset(te)


# ------------------------------------------------------------ metrics

def _check_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if pred.size != truth.size:
        raise ShapeError(f"{pred.size} predictions for {truth.size} labels")
    if pred.size == 0:
        raise InvalidInputError("empty prediction vector")
    return pred, truth


def accuracy(pred, truth) -> float:
    pred, truth = _check_pair(pred, truth)
    return float(np.mean(pred == truth))


def macro_f1(pred, truth, c: int) -> float:
    """Unweighted mean of per-class F1; a class with precision + recall = 0 scores 0."""
    pred, truth = _check_pair(pred, truth)
    if pred.max() >= c or truth.max() >= c or min(pred.min(), truth.min()) < 0:
        raise InvalidInputError(f"labels must lie in [0, {c})")
    f1 = np.zeros(c)
    for k in range(c):
        tp = np.sum((pred == k) & (truth == k))
        n_pred = np.sum(pred == k)
        n_true = np.sum(truth == k)
        if tp == 0:
            continue
        p, r = tp / n_pred, tp / n_true
        f1[k] = 2 * p * r / (p + r)
    return float(f1.mean())
