"""Labeled feature datasets: CSV I/O, nearest-neighbour scans and synthetic
generators (Gaussian clusters, the two-segment toy geometry)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, DimensionError, ParseError
from .rng import make_rng

# queries x training points x dims held in memory at once by the scans
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    label_names: tuple | None = field(default=None)

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        y = np.array(self.labels)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ContractError("features must be a non-empty (m, n2) array")
        if y.shape != (x.shape[0],):
            raise ContractError("need exactly one label per feature row")
        if not np.all(np.isfinite(x)):
            raise ContractError("features must be finite")
        if y.dtype.kind not in "iu":
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise ContractError("labels must be integers")
        y = y.astype(np.int64)
        if np.any(y < 0):
            raise ContractError("labels must be nonnegative")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(self.features[idx], self.labels[idx], self.label_names)


def _format_float(v: float) -> str:
    # repr is the shortest string that round-trips (<= 17 significant digits)
    return repr(float(v))


def save_dataset(ds: LabeledDataset, path) -> None:
    lines = []
    for label, row in zip(ds.labels, ds.features):
        lines.append(",".join([str(int(label))] + [_format_float(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def dumps_dataset(ds: LabeledDataset) -> str:
    return "\n".join(
        ",".join([str(int(lab))] + [_format_float(v) for v in row])
        for lab, row in zip(ds.labels, ds.features)
    ) + "\n"


def _parse_label(cell: str):
    try:
        return int(cell)
    except ValueError:
        return cell


def loads_dataset(text: str) -> LabeledDataset:
    """Parse headerless CSV text: ``label,f1,...,fn`` per row.

    Integer labels are kept as-is; any non-integer label switches the file to
    string labels, mapped to 0..K-1 in sorted order (see ``label_names``).
    """
    raw_labels, rows = [], []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) < 2:
            raise ParseError("row needs a label and at least one feature", lineno)
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"ragged row: expected {width} cells, got {len(cells)}", lineno)
        try:
            feats = [float(c) for c in cells[1:]]
        except ValueError:
            raise ParseError("non-numeric feature cell", lineno) from None
        if not all(np.isfinite(feats)):
            raise ParseError("non-finite feature value", lineno)
        lab = _parse_label(cells[0])
        if isinstance(lab, int) and lab < 0:
            raise ParseError("labels must be nonnegative", lineno)
        raw_labels.append(lab)
        rows.append(feats)
    if not rows:
        raise ParseError("empty dataset")
    names = None
    if all(isinstance(l, int) for l in raw_labels):
        labels = np.array(raw_labels, dtype=np.int64)
    else:
        names = tuple(sorted({str(l) for l in raw_labels}))
        index = {n: i for i, n in enumerate(names)}
        labels = np.array([index[str(l)] for l in raw_labels], dtype=np.int64)
    return LabeledDataset(np.array(rows, dtype=float), labels, names)


def load_dataset(path) -> LabeledDataset:
    return loads_dataset(Path(path).read_text(encoding="utf-8"))


def _pairwise_min(a: np.ndarray, b: np.ndarray):
    """Exact (difference-based) distances; returns argmin and min per row of a."""
    n_a = a.shape[0]
    step = max(1, _CHUNK_ELEMS // max(1, b.shape[0] * a.shape[1]))
    idx = np.empty(n_a, dtype=np.int64)
    dist = np.empty(n_a)
    for s in range(0, n_a, step):
        d = np.sqrt(np.sum((a[s:s + step, None, :] - b[None, :, :]) ** 2, axis=2))
        j = np.argmin(d, axis=1)  # first occurrence: lowest index wins ties
        idx[s:s + step] = j
        dist[s:s + step] = d[np.arange(d.shape[0]), j]
    return idx, dist


def nearest_neighbor(ds: LabeledDataset, q):
    """Exact Euclidean nearest neighbour by linear scan (ties: lowest index)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (ds.dim,):
        raise DimensionError("query dimension mismatch")
    d = np.sqrt(np.sum((ds.features - q) ** 2, axis=1))
    i = int(np.argmin(d))
    return i, float(d[i])


def nearest_neighbors(ds: LabeledDataset, queries):
    """Vectorized ``nearest_neighbor`` over rows of ``queries``."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != ds.dim:
        raise DimensionError("query dimension mismatch")
    return _pairwise_min(queries, ds.features)


def cross_label_nn_distances(ds: LabeledDataset) -> np.ndarray:
    """Per point, distance to the nearest point carrying a different label (inf if none)."""
    out = np.full(len(ds), np.inf)
    for lab in ds.classes:
        mine = ds.labels == lab
        other = ~mine
        if other.any():
            _, d = _pairwise_min(ds.features[mine], ds.features[other])
            out[mine] = d
    return out


def min_interclass_distance(ds: LabeledDataset) -> float:
    if ds.classes.size < 2:
        raise ContractError("min interclass distance needs at least two labels")
    return float(np.min(cross_label_nn_distances(ds)))


def within_nn_distances(ds: LabeledDataset) -> np.ndarray:
    """Per point, distance to its nearest *other* training point."""
    m = len(ds)
    out = np.full(m, np.inf)
    step = max(1, _CHUNK_ELEMS // max(1, m * ds.dim))
    for s in range(0, m, step):
        blk = ds.features[s:s + step]
        d = np.sqrt(np.sum((blk[:, None, :] - ds.features[None, :, :]) ** 2, axis=2))
        d[np.arange(blk.shape[0]), np.arange(s, s + blk.shape[0])] = np.inf
        out[s:s + step] = d.min(axis=1)
    return out


def gen_gaussian_clusters(n2: int, per_class, centers, stddev: float, seed: int) -> LabeledDataset:
    """Class k gets ``per_class[k]`` points ~ centers[k] + stddev * N(0, I)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k = centers.shape[0]
    if centers.shape[1] != n2:
        raise DimensionError("centers must live in R^n2")
    if k < 2:
        warnings.warn("fewer than two classes; classification is trivial", stacklevel=2)
    for i in range(k):
        for j in range(i + 1, k):
            if np.array_equal(centers[i], centers[j]):
                raise ContractError("cluster centers must be pairwise distinct")
    if np.isscalar(per_class):
        per_class = [int(per_class)] * k
    rng = make_rng(seed)
    feats, labels = [], []
    for lab, (c, cnt) in enumerate(zip(centers, per_class)):
        feats.append(c + stddev * rng.standard_normal((cnt, n2)))
        labels.append(np.full(cnt, lab))
    return LabeledDataset(np.vstack(feats), np.concatenate(labels))


@dataclass(frozen=True)
class ToyGeometry:
    """Two collinear segments of length D separated by a gap r, m points each."""

    D: float
    r: float
    m: int
    c: float = 0.5

    def __post_init__(self):
        if not (self.D > 0 and self.r > 0 and self.c > 0):
            raise ContractError("D, r and c must be positive")
        if self.m < 1:
            raise ContractError("m must be >= 1")


def gen_toy_segments(geom: ToyGeometry, seed: int) -> LabeledDataset:
    """Class 0 uniform on [(0,0),(D,0)], class 1 uniform on [(D+r,0),(2D+r,0)]."""
    rng = make_rng(seed)
    a = rng.uniform(0.0, geom.D, geom.m)
    b = geom.D + geom.r + rng.uniform(0.0, geom.D, geom.m)
    xs = np.concatenate([a, b])
    feats = np.column_stack([xs, np.zeros_like(xs)])
    labels = np.concatenate([np.zeros(geom.m, dtype=int), np.ones(geom.m, dtype=int)])
    return LabeledDataset(feats, labels)


def random_split(ds: LabeledDataset, seed: int, fraction: float = 0.5):
    """Seeded random partition into two datasets (first gets ``fraction``)."""
    rng = make_rng(seed)
    perm = rng.permutation(len(ds))
    cut = int(round(fraction * len(ds)))
    if cut < 1 or cut >= len(ds):
        raise ContractError("split would leave one side empty")
    return ds.subset(np.sort(perm[:cut])), ds.subset(np.sort(perm[cut:]))
