"""Labeled datasets: loading, synthesis, label corruption and splitting.

Every random operation takes an explicit integer seed and builds its own
``numpy.random.Generator``; nothing touches global RNG state.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class DatasetError(ValueError):
    """Malformed input data (bad CSV, inconsistent shapes, invalid labels)."""


class Sample(NamedTuple):
    id: int
    features: np.ndarray
    label: int


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labeled feature matrix.

    ``X`` is (N, dim) float64, ``y`` holds integer labels in ``[0, num_classes)``.
    Sample ids are the row positions 0..N-1. ``origin`` carries the id each
    row had in the dataset it was derived from (split, removal, batching), so
    rows stay traceable after renumbering.
    """

    X: np.ndarray
    y: np.ndarray
    num_classes: int
    origin: np.ndarray = field(default=None)
    label_names: tuple = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, 0)
        if X.ndim != 2:
            raise DatasetError(f"features must be a 2-D matrix, got shape {X.shape}")
        y = np.asarray(self.y)
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.mod(y, 1) == 0):
                raise DatasetError("labels must be integers")
        y = y.astype(np.int64).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise DatasetError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if self.num_classes < 2:
            raise DatasetError("num_classes must be >= 2")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise DatasetError(f"labels must lie in [0, {self.num_classes})")
        origin = np.arange(len(y)) if self.origin is None else self.origin
        origin = np.asarray(origin, dtype=np.int64).reshape(-1)
        if origin.shape[0] != y.shape[0]:
            raise DatasetError("origin length does not match sample count")
        object.__setattr__(self, "X", _frozen(X, np.float64))
        object.__setattr__(self, "y", _frozen(y, np.int64))
        object.__setattr__(self, "origin", _frozen(origin, np.int64))
        if self.label_names is not None:
            object.__setattr__(self, "label_names", tuple(str(s) for s in self.label_names))

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, i) -> Sample:
        i = int(i)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return Sample(i, self.X[i], int(self.y[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, ids) -> "Dataset":
        """Rows ``ids`` (in the given order) as a new dataset with fresh ids."""
        ids = np.asarray(ids, dtype=np.int64)
        return Dataset(self.X[ids], self.y[ids], self.num_classes,
                       origin=self.origin[ids], label_names=self.label_names)

    def with_labels(self, y) -> "Dataset":
        return Dataset(self.X, y, self.num_classes, origin=self.origin,
                       label_names=self.label_names)

    def standardized(self, mean=None, std=None) -> "Dataset":
        """Z-score features. Statistics default to this dataset's own."""
        if mean is None:
            mean = self.X.mean(axis=0)
        if std is None:
            std = self.X.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return Dataset((self.X - mean) / std, self.y, self.num_classes,
                       origin=self.origin, label_names=self.label_names)

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        parts = [p for p in parts]
        if not parts:
            raise DatasetError("nothing to concatenate")
        dims = {p.dim for p in parts if len(p)}
        if len(dims) > 1:
            raise DatasetError(f"dimension mismatch across parts: {sorted(dims)}")
        C = max(p.num_classes for p in parts)
        nonempty = [p for p in parts if len(p)] or parts[:1]
        return cls(np.vstack([p.X for p in nonempty]),
                   np.concatenate([p.y for p in nonempty]), C,
                   origin=np.concatenate([p.origin for p in nonempty]),
                   label_names=parts[0].label_names)


@dataclass(frozen=True, eq=False)
class FlipMask:
    flipped: np.ndarray
    original_labels: dict

    @property
    def flipped_ids(self) -> np.ndarray:
        return np.flatnonzero(self.flipped)

    @property
    def count(self) -> int:
        return int(self.flipped.sum())


# --------------------------------------------------------------------------
# CSV

def _parse_int(s):
    try:
        v = float(s)
    except ValueError:
        return None
    if not math.isfinite(v) or v != int(v):
        return None
    return int(v)


def build_label_map(raw_labels, base=None):
    """Map raw label strings to dense integers.

    Integer-valued labels are ordered numerically, anything else by first
    appearance. ``base`` is an existing mapping that is extended, never
    reordered, so train/val/test files loaded in sequence agree.
    """
    mapping = dict(base or {})
    new = [s for s in dict.fromkeys(raw_labels) if s not in mapping]
    as_int = [_parse_int(s) for s in new]
    existing_int = all(_parse_int(s) is not None for s in mapping)
    if new and existing_int and all(v is not None for v in as_int):
        new = [s for _, s in sorted(zip(as_int, new), key=lambda t: (t[0], t[1]))]
    for s in new:
        mapping[s] = len(mapping)
    return mapping


def load_csv(path, label_column=-1, has_header=True, label_map=None,
             num_classes=None) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    ``label_column`` is a column name (with a header) or an integer index.
    Errors name the offending 1-based row and column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = None
    if has_header:
        header, rows = [h.strip() for h in rows[0]], rows[1:]
        if not rows:
            raise DatasetError(f"{path}: header but no data rows")
    ncols = len(header) if header else len(rows[0])
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None:
            raise DatasetError(f"{path}: label column given by name but file has no header")
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header {header}")
        li = header.index(label_column)
    else:
        li = int(label_column)
        if not -ncols <= li < ncols:
            raise DatasetError(f"{path}: label column index {li} out of range for {ncols} columns")
        li %= ncols
    first_row = 2 if has_header else 1
    feats, raw = [], []
    for k, row in enumerate(rows):
        lineno = first_row + k
        if len(row) != ncols:
            raise DatasetError(f"{path}: row {lineno} has {len(row)} columns, expected {ncols}")
        vals = []
        for j, cell in enumerate(row):
            if j == li:
                continue
            try:
                v = float(cell)
            except ValueError:
                col = header[j] if header else j + 1
                raise DatasetError(
                    f"{path}: row {lineno}, column {col}: cannot parse {cell!r} as a number"
                ) from None
            vals.append(v)
        feats.append(vals)
        raw.append(row[li].strip())
    mapping = build_label_map(raw, label_map)
    y = np.array([mapping[s] for s in raw], dtype=np.int64)
    C = num_classes or max(len(mapping), 2)
    names = [None] * len(mapping)
    for s, i in mapping.items():
        names[i] = s
    X = np.array(feats, dtype=np.float64).reshape(len(rows), ncols - 1)
    return Dataset(X, y, C, label_names=tuple(names))


def label_map_of(ds: Dataset) -> dict:
    if ds.label_names is None:
        return {str(c): c for c in range(ds.num_classes)}
    return {s: i for i, s in enumerate(ds.label_names)}


def save_csv(ds: Dataset, path, label_column="label"):
    names = ds.label_names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(ds.dim)] + [label_column])
        for x, lab in zip(ds.X, ds.y):
            label = names[lab] if names and lab < len(names) else str(int(lab))
            w.writerow([format(v, ".17g") for v in x] + [label])


# --------------------------------------------------------------------------
# Synthesis and corruption

def _class_centers(rng, C, dim, separation):
    if C <= dim + 1:
        # regular simplex: every pair of centers exactly `separation` apart
        E = np.eye(C) - 1.0 / C
        Q, _ = np.linalg.qr(E[:, : C - 1])
        simplex = E @ Q * (separation / math.sqrt(2.0))
        R, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        return simplex @ R[:, : C - 1].T
    side = separation * C
    for _ in range(10_000):
        centers = rng.uniform(0.0, side, size=(C, dim))
        d = np.linalg.norm(centers[:, None] - centers[None], axis=-1)
        if d[np.triu_indices(C, 1)].min() >= separation:
            return centers
        side *= 1.05
    raise DatasetError("could not place well-separated class centers")


def synth_blobs(n, dim, num_classes, separation=4.0, noise_std=1.0, seed=0) -> Dataset:
    """Gaussian clusters, one per class, with pairwise center distance >= separation."""
    if num_classes < 2 or n < num_classes:
        raise DatasetError("need n >= num_classes >= 2")
    if dim < 1:
        raise DatasetError("dim must be positive")
    if separation <= 0 or noise_std < 0:
        raise DatasetError("separation must be > 0 and noise_std >= 0")
    rng = np.random.default_rng(seed)
    centers = _class_centers(rng, num_classes, dim, separation)
    y = rng.permutation(np.arange(n) % num_classes)
    X = centers[y] + noise_std * rng.standard_normal((n, dim))
    return Dataset(X, y, num_classes)


def flip_labels(ds: Dataset, ratio: float, seed=0):
    """Reassign ``round(ratio * N)`` labels to a different class, chosen uniformly."""
    if not 0.0 <= ratio <= 1.0:
        raise DatasetError("flip ratio must lie in [0, 1]")
    n = len(ds)
    count = int(math.floor(ratio * n + 0.5))
    rng = np.random.default_rng(seed)
    ids = np.sort(rng.choice(n, size=count, replace=False))
    # offset in 1..C-1 keeps the new label uniform over the other classes
    offsets = rng.integers(1, ds.num_classes, size=count)
    y = ds.y.copy()
    y[ids] = (y[ids] + offsets) % ds.num_classes
    flipped = np.zeros(n, dtype=bool)
    flipped[ids] = True
    flipped.setflags(write=False)
    mask = FlipMask(flipped, {int(i): int(ds.y[i]) for i in ids})
    return ds.with_labels(y), mask


def split_sizes(n, fractions):
    fr = [float(f) for f in fractions]
    if any(f < 0 for f in fr):
        raise DatasetError("split fractions must be non-negative")
    if abs(sum(fr) - 1.0) > 1e-9:
        raise DatasetError(f"split fractions must sum to 1, got {sum(fr)}")
    sizes = [int(math.floor(f * n + 1e-9)) for f in fr]
    rest = n - sum(sizes)
    for i, f in enumerate(fr):
        if rest == 0:
            break
        if f > 0:
            sizes[i] += 1
            rest -= 1
    for f, s in zip(fr, sizes):
        if f > 0 and s == 0:
            raise DatasetError(f"fraction {f} of {n} samples yields an empty split")
    return sizes


def split(ds: Dataset, fractions=(0.8, 0.1, 0.1), seed=0):
    """Shuffle and partition into (train, val, test) with renumbered ids."""
    sizes = split_sizes(len(ds), fractions)
    perm = np.random.default_rng(seed).permutation(len(ds))
    bounds = np.cumsum([0] + sizes)
    return tuple(ds.subset(perm[a:b]) for a, b in zip(bounds[:-1], bounds[1:]))


def balanced_subsample(ds: Dataset, seed=0) -> Dataset:
    """Downsample every class uniformly to the minority class count."""
    counts = np.bincount(ds.y, minlength=ds.num_classes)
    present = counts[counts > 0]
    m = int(present.min())
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(ds.num_classes):
        idx = np.flatnonzero(ds.y == c)
        if len(idx):
            keep.append(rng.choice(idx, size=m, replace=False))
    return ds.subset(np.sort(np.concatenate(keep)))


def chunk(ds: Dataset, n_parts: int):
    """Contiguous near-equal shards, earliest shards absorbing the remainder."""
    if n_parts < 1 or n_parts > len(ds):
        raise DatasetError(f"cannot cut {len(ds)} samples into {n_parts} parts")
    base, rest = divmod(len(ds), n_parts)
    sizes = [base + (1 if i < rest else 0) for i in range(n_parts)]
    bounds = np.cumsum([0] + sizes)
    return [ds.subset(np.arange(a, b)) for a, b in zip(bounds[:-1], bounds[1:])]
