"""Subspace primitives: Haar and cone-mixture subspace samplers, affine
projections, and the special functions behind sphere-cap probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, ContractError, DimensionError
from .rng import make_rng

ORTHO_TOL = 1e-10
_RANK_TOL = 1e-10
_MAX_RESAMPLE = 16


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal basis (columns) of a linear subspace of R^n2."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2:
            raise DimensionError("basis must be a 2-D array")
        n2, n3 = b.shape
        if not 1 <= n3 < n2:
            raise DimensionError(f"need 1 <= n3 < n2, got n2={n2}, n3={n3}")
        err = np.max(np.abs(b.T @ b - np.eye(n3)))
        if err > ORTHO_TOL:
            raise ContractError(f"basis not orthonormal (max error {err:.2e})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    @classmethod
    def span(cls, *vectors) -> "Subspace":
        """Orthonormalize the given vectors (in order) into a Subspace."""
        mat = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
        q = _gram_schmidt_batch(mat[None])[0]
        if q is None:
            raise DimensionError("vectors are linearly dependent")
        return cls(q)


def _gram_schmidt_batch(mats: np.ndarray):
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    ``mats`` has shape (count, n2, k). Returns an array of the same shape
    with orthonormal columns, or None if any column collapsed.
    """
    q = np.array(mats, dtype=float, copy=True)
    k = q.shape[2]
    for j in range(k):
        v = q[:, :, j]
        norm0 = np.linalg.norm(v, axis=1)
        for _ in range(2):
            for i in range(j):
                coef = np.einsum("bn,bn->b", q[:, :, i], v)
                v -= coef[:, None] * q[:, :, i]
        norm = np.linalg.norm(v, axis=1)
        if np.any(norm <= _RANK_TOL * np.maximum(norm0, 1e-300)):
            return None
        q[:, :, j] = v / norm[:, None]
    return q


def _check_dims(n2: int, n3: int) -> None:
    if not (isinstance(n2, (int, np.integer)) and isinstance(n3, (int, np.integer))):
        raise DimensionError("dimensions must be integers")
    if not 1 <= n3 < n2:
        raise DimensionError(f"need 1 <= n3 < n2, got n2={n2}, n3={n3}")


def sample_uniform_subspaces(n2: int, n3: int, count: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Batch of Haar-random bases, shape (count, n2, n3)."""
    _check_dims(n2, n3)
    for _ in range(_MAX_RESAMPLE):
        q = _gram_schmidt_batch(rng.standard_normal((count, n2, n3)))
        if q is not None:
            return q
    raise RuntimeError("repeated degenerate Gaussian draws")  # pragma: no cover


def sample_uniform_subspace(n2: int, n3: int, seed: int) -> Subspace:
    """Haar-random n3-dimensional subspace of R^n2 from an explicit seed."""
    return Subspace(sample_uniform_subspaces(n2, n3, 1, make_rng(seed))[0])


def cone_mass(n2: int, cosine: float) -> float:
    """Uniform probability that a random line makes |cos| >= cosine with a fixed axis.

    For a uniform unit vector v, (v . a)^2 ~ Beta(1/2, (n2-1)/2).
    """
    return float(special.betaincc(0.5, (n2 - 1) / 2.0, cosine * cosine))


def estimate_cone_mass_mc(n2: int, axis, cosine: float, trials: int, seed: int) -> float:
    rng = make_rng(seed)
    axis = np.asarray(axis, dtype=float)
    g = rng.standard_normal((trials, n2))
    cos = np.abs(g @ axis) / np.linalg.norm(g, axis=1)
    return float(np.mean(cos >= cosine))


@dataclass(frozen=True, eq=False)
class KappaBoundedSubspaceConfig:
    """Mixture of a cone-conditioned and a Haar subspace distribution.

    With probability ``mixture_weight`` the first basis direction is uniform on
    the double cone ``|cos(v, cone_axis)| >= cone_cosine``; otherwise the whole
    subspace is Haar. The density ratio to Haar is at most
    ``mixture_weight / cone_mass + (1 - mixture_weight)``.
    """

    ambient_dim: int
    subspace_dim: int
    mixture_weight: float
    cone_axis: np.ndarray
    cone_cosine: float
    cone_mass: float = field(init=False)
    kappa: float = field(init=False)

    def __post_init__(self):
        _check_dims(self.ambient_dim, self.subspace_dim)
        if not 0.0 <= self.mixture_weight <= 1.0:
            raise ConfigError("mixture_weight must lie in [0, 1]")
        if not 0.0 < self.cone_cosine < 1.0:
            raise ConfigError("cone_cosine must lie in (0, 1); the cone is empty otherwise")
        axis = np.asarray(self.cone_axis, dtype=float)
        if axis.shape != (self.ambient_dim,):
            raise DimensionError("cone_axis has the wrong dimension")
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ConfigError("cone_axis must be nonzero")
        axis = axis / norm
        axis.setflags(write=False)
        object.__setattr__(self, "cone_axis", axis)
        q = cone_mass(self.ambient_dim, self.cone_cosine)
        object.__setattr__(self, "cone_mass", q)
        object.__setattr__(self, "kappa", self.mixture_weight / q + (1.0 - self.mixture_weight))

    @classmethod
    def with_cone_mass(cls, ambient_dim, subspace_dim, mixture_weight, cone_axis, mass):
        """Pick the cone half-angle so that the cone has uniform mass ``mass``."""
        if not 0.0 < mass < 1.0:
            raise ConfigError("cone mass must lie in (0, 1)")
        c2 = special.betainccinv(0.5, (ambient_dim - 1) / 2.0, mass)
        return cls(ambient_dim, subspace_dim, mixture_weight, cone_axis, float(math.sqrt(c2)))


def _cone_directions(cfg: KappaBoundedSubspaceConfig, count: int,
                     rng: np.random.Generator) -> np.ndarray:
    n2 = cfg.ambient_dim
    a = cfg.cone_axis
    # truncated Beta(1/2, (n2-1)/2) for the squared cosine, via the upper tail
    v = rng.uniform(0.0, 1.0, count) * cfg.cone_mass
    v = np.maximum(v, np.finfo(float).tiny)
    t2 = special.betainccinv(0.5, (n2 - 1) / 2.0, v)
    t = np.sqrt(np.clip(t2, cfg.cone_cosine ** 2, 1.0))
    sign = np.where(rng.uniform(size=count) < 0.5, -1.0, 1.0)
    g = rng.standard_normal((count, n2))
    g -= np.outer(g @ a, a)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return (sign * t)[:, None] * a[None, :] + np.sqrt(1.0 - t * t)[:, None] * g


def sample_kappa_bounded_subspaces(cfg: KappaBoundedSubspaceConfig, count: int,
                                   rng: np.random.Generator) -> np.ndarray:
    n2, n3 = cfg.ambient_dim, cfg.subspace_dim
    out = sample_uniform_subspaces(n2, n3, count, rng)
    in_cone = rng.uniform(size=count) < cfg.mixture_weight
    k = int(in_cone.sum())
    if k:
        first = _cone_directions(cfg, k, rng)
        rest = rng.standard_normal((k, n2, n3 - 1))
        mats = np.concatenate([first[:, :, None], rest], axis=2)
        q = _gram_schmidt_batch(mats)
        if q is None:  # pragma: no cover - probability zero
            raise RuntimeError("degenerate draw in cone sampler")
        out[in_cone] = q
    return out


def sample_kappa_bounded_subspace(cfg: KappaBoundedSubspaceConfig, seed: int) -> Subspace:
    return Subspace(sample_kappa_bounded_subspaces(cfg, 1, make_rng(seed))[0])


def project_point_onto_affine_subspace(v, origin, S: Subspace):
    """Closest point to ``v`` on ``origin + S`` and its coordinates in S's basis."""
    v = np.asarray(v, dtype=float)
    origin = np.asarray(origin, dtype=float)
    if v.shape != (S.ambient_dim,) or origin.shape != (S.ambient_dim,):
        raise DimensionError("point, origin and subspace dimensions disagree")
    coords = S.basis.T @ (v - origin)
    return origin + S.basis @ coords, coords


def log_unit_sphere_area(m: int) -> float:
    return math.log(2.0) + (m + 1) / 2.0 * math.log(math.pi) - special.gammaln((m + 1) / 2.0)


def unit_sphere_area(m: int) -> float:
    """Surface area of the unit m-sphere in R^{m+1}."""
    if m < 0:
        raise ContractError("sphere dimension must be >= 0")
    return math.exp(log_unit_sphere_area(m))


def log_beta(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        raise ContractError("Beta function arguments must be positive")
    return float(special.gammaln(a) + special.gammaln(b) - special.gammaln(a + b))


def beta_function(a: float, b: float) -> float:
    return math.exp(log_beta(a, b))


def sphere_cap_fraction(n: int, k: int, eps: float, mode: str = "exact") -> float:
    """Fraction of the unit sphere in R^n within distance ``eps`` of a fixed
    (n-k)-dimensional subspace through the centre.

    ``exact`` integrates the density of the distance rho,
    rho^{k-1} (1 - rho^2)^{(n-k-2)/2}, after substituting rho = sin(theta)
    to remove the endpoint singularity. ``upper_bound`` is the closed-form
    (2 eps^k / k) A(k-1) A(n-k-1) / A(n-1).
    """
    if not 1 <= k < n:
        raise DimensionError(f"need 1 <= k < n, got n={n}, k={k}")
    if not 0.0 <= eps <= 1.0:
        raise ContractError("eps must lie in [0, 1]")
    log_ratio = (log_unit_sphere_area(k - 1) + log_unit_sphere_area(n - k - 1)
                 - log_unit_sphere_area(n - 1))
    if mode == "upper_bound":
        if eps == 0.0:
            return 0.0
        return math.exp(math.log(2.0 / k) + k * math.log(eps) + log_ratio)
    if mode != "exact":
        raise ContractError(f"unknown mode {mode!r}")
    if eps == 0.0:
        return 0.0
    top = math.asin(eps)

    def integrand(theta):
        return math.sin(theta) ** (k - 1) * math.cos(theta) ** (n - k - 1)

    val, _ = integrate.quad(integrand, 0.0, top, epsabs=0.0, epsrel=1e-12, limit=200)
    return min(1.0, math.exp(log_ratio) * val)
