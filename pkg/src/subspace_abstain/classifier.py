"""Thresholded nearest-neighbour classifier with abstention, its
point-specific-threshold variant, and a ridge one-vs-rest linear baseline."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (LabeledDataset, cross_label_nn_distances, dumps_dataset,
                   load_dataset, loads_dataset, nearest_neighbors)
from .errors import ConfigError, ContractError, DimensionError, EmptyModelError

ABSTAIN = -1


@dataclass(frozen=True)
class ClassifierConfig:
    tau: float
    sigma: float = 0.0

    def __post_init__(self):
        for name in ("tau", "sigma"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or math.isnan(v) or v < 0:
                raise ConfigError(f"{name} must be a nonnegative number")
        if math.isinf(self.sigma):
            raise ConfigError("sigma must be finite")


@dataclass(frozen=True, eq=False)
class RobustModel:
    train: LabeledDataset
    config: ClassifierConfig
    removed_indices: tuple = field(default=())

    @property
    def tau(self) -> float:
        return self.config.tau

    def with_tau(self, tau: float) -> "RobustModel":
        return RobustModel(self.train, ClassifierConfig(tau, self.config.sigma),
                           self.removed_indices)


def preprocess_separation(ds: LabeledDataset, sigma: float):
    """Drop every point whose nearest differently-labelled point is closer than sigma.

    Distances are measured in the original dataset, all deletions at once.
    Returns (kept dataset, sorted removed indices).
    """
    if sigma < 0 or math.isnan(sigma):
        raise ConfigError("sigma must be nonnegative")
    if sigma == 0:
        return ds, ()
    cross = cross_label_nn_distances(ds)
    drop = cross < sigma
    if drop.all():
        raise EmptyModelError(f"sigma={sigma} removes every training point")
    removed = tuple(int(i) for i in np.flatnonzero(drop))
    if not removed:
        return ds, ()
    return ds.subset(np.flatnonzero(~drop)), removed


def build_model(ds: LabeledDataset, tau: float, sigma: float = 0.0) -> RobustModel:
    cfg = ClassifierConfig(float(tau), float(sigma))
    kept, removed = preprocess_separation(ds, cfg.sigma)
    return RobustModel(kept, cfg, removed)


def predict(model: RobustModel, x, tau: float | None = None):
    """Label of the nearest training point if it is strictly closer than tau, else None."""
    tau = model.tau if tau is None else tau
    x = np.asarray(x, dtype=float)
    if x.shape != (model.train.dim,):
        raise DimensionError("query dimension mismatch")
    d = np.sqrt(np.sum((model.train.features - x) ** 2, axis=1))
    i = int(np.argmin(d))
    if d[i] < tau:
        return int(model.train.labels[i])
    return None


def predict_batch(model: RobustModel, xs, tau: float | None = None) -> np.ndarray:
    """Vectorized ``predict``; abstentions are reported as ``ABSTAIN``."""
    tau = model.tau if tau is None else tau
    idx, dist = nearest_neighbors(model.train, xs)
    out = model.train.labels[idx].copy()
    out[~(dist < tau)] = ABSTAIN
    return out


def point_specific_thresholds(setA: LabeledDataset, setB: LabeledDataset) -> np.ndarray:
    """tau_i = distance from A_i to the closest differently-labelled point of B (inf if none)."""
    if setA.dim != setB.dim:
        raise DimensionError("sets live in different dimensions")
    out = np.full(len(setA), np.inf)
    for lab in setA.classes:
        mine = setA.labels == lab
        other = setB.labels != lab
        if other.any():
            a = setA.features[mine]
            b = setB.features[other]
            d = np.sqrt(np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2))
            out[mine] = d.min(axis=1)
    return out


@dataclass(frozen=True, eq=False)
class PointSpecificModel:
    setA: LabeledDataset
    thresholds: np.ndarray
    unbounded_indices: tuple  # A points with no differing label in B

    @classmethod
    def fit(cls, setA: LabeledDataset, setB: LabeledDataset) -> "PointSpecificModel":
        t = point_specific_thresholds(setA, setB)
        return cls(setA, t, tuple(int(i) for i in np.flatnonzero(np.isinf(t))))


def predict_point_specific(setA, setB=None, x=None):
    """Nearest point of A decides, but only within its own threshold.

    Accepts either (setA, setB, x) or (PointSpecificModel, x).
    """
    if isinstance(setA, PointSpecificModel):
        model, x = setA, setB
    else:
        model = PointSpecificModel.fit(setA, setB)
    x = np.asarray(x, dtype=float)
    d = np.sqrt(np.sum((model.setA.features - x) ** 2, axis=1))
    i = int(np.argmin(d))
    if d[i] < model.thresholds[i]:
        return int(model.setA.labels[i])
    return None


# ---- linear baseline ----

@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray  # (K, n2)
    biases: np.ndarray   # (K,)
    classes: np.ndarray  # (K,) original label ids
    ridge: float = 1e-3

    def __post_init__(self):
        if self.weights.shape[0] < 2:
            raise ContractError("linear model needs at least two classes")

    def scores(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return xs @ self.weights.T + self.biases


def train_linear_baseline(ds: LabeledDataset, ridge: float = 1e-3,
                          max_retries: int = 3) -> LinearModel:
    """One-vs-rest ridge regression on +-1 targets (bias unpenalized)."""
    classes = ds.classes
    if classes.size < 2:
        raise ContractError("linear baseline needs at least two classes")
    x = ds.features
    m, n2 = x.shape
    xa = np.hstack([x, np.ones((m, 1))])
    targets = np.where(ds.labels[:, None] == classes[None, :], 1.0, -1.0)
    gram = xa.T @ xa
    lam = ridge
    for attempt in range(max_retries + 1):
        reg = lam * np.eye(n2 + 1)
        reg[n2, n2] = 0.0
        a = gram + reg
        if np.linalg.cond(a) < 1.0 / np.finfo(float).eps:
            coef = np.linalg.solve(a, xa.T @ targets)
            return LinearModel(coef[:n2].T.copy(), coef[n2].copy(), classes, lam)
        lam *= 10.0
    raise np.linalg.LinAlgError("normal equations singular even after raising the ridge")


def predict_linear(model: LinearModel, x) -> int:
    s = model.scores(x)[0]
    return int(model.classes[int(np.argmax(s))])


def predict_linear_batch(model: LinearModel, xs) -> np.ndarray:
    return model.classes[np.argmax(model.scores(xs), axis=1)]


# ---- persistence ----

def model_to_json(model: RobustModel, dataset_path: str | None = None,
                  original: LabeledDataset | None = None) -> dict:
    """Model document. The dataset is either referenced by path (the original,
    pre-preprocessing file) or embedded as CSV text of the kept points."""
    doc = {
        "tau": model.config.tau if math.isfinite(model.config.tau) else "inf",
        "sigma": model.config.sigma,
        "removed_indices": list(model.removed_indices),
    }
    if dataset_path is not None:
        doc["dataset_path"] = str(dataset_path)
    else:
        doc["inline_csv"] = dumps_dataset(original if original is not None else model.train)
        doc["inline_is_original"] = original is not None
    return doc


def model_from_json(doc: dict, base_dir=None) -> RobustModel:
    tau = float(doc["tau"])
    sigma = float(doc.get("sigma", 0.0))
    if "dataset_path" in doc:
        p = Path(doc["dataset_path"])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        original = load_dataset(p)
    elif "inline_csv" in doc:
        original = loads_dataset(doc["inline_csv"])
        if not doc.get("inline_is_original", True):
            return RobustModel(original, ClassifierConfig(tau, sigma),
                               tuple(doc.get("removed_indices", ())))
    else:
        raise ContractError("model document has neither dataset_path nor inline_csv")
    model = build_model(original, tau, sigma)
    stored = tuple(doc.get("removed_indices", model.removed_indices))
    if stored != model.removed_indices:
        raise ContractError("removed_indices do not match the dataset and sigma")
    return model


def save_model(model: RobustModel, path, **kw) -> None:
    Path(path).write_text(json.dumps(model_to_json(model, **kw), indent=2) + "\n")


def load_model(path) -> RobustModel:
    p = Path(path)
    return model_from_json(json.loads(p.read_text()), base_dir=p.parent)
