"""Step functions of the threshold tau on a closed interval [lo, hi].

Piece k covers (b_{k-1}, b_k] (with b_{-1} = lo, and the first piece also
containing lo itself), so the value at tau is values[#{b : b < tau}]. This
left-continuous convention matches the strict "< tau" of the classifier:
abstention of a point with nearest-neighbour distance a is 1{tau <= a}, and
an attack with critical threshold t succeeds for 1{tau > t}; both jump just
after their breakpoint. A breakpoint equal to lo is allowed and gives a
zero-length first piece (the value attained at lo only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    lo: float
    hi: float
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ContractError("domain must be a finite interval with lo < hi")
        b = np.asarray(self.breakpoints, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != b.size + 1:
            raise ContractError("need exactly one more value than breakpoints")
        if b.size and (b[0] < lo or b[-1] >= hi or np.any(np.diff(b) <= 0)):
            raise ContractError("breakpoints must be strictly increasing within [lo, hi)")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    # ---- construction ----

    @classmethod
    def constant(cls, lo, hi, value=0.0) -> "PiecewiseConstantFn":
        return cls(lo, hi, np.zeros(0), np.array([float(value)]))

    @classmethod
    def from_thresholds(cls, lo, hi, at_most=(), above=(), weight=1.0) -> "PiecewiseConstantFn":
        """weight * (#{a in at_most : tau <= a} + #{t in above : tau > t})."""
        a = np.sort(np.asarray(at_most, dtype=float).ravel())
        t = np.sort(np.asarray(above, dtype=float).ravel())
        cuts = np.concatenate([a, t])
        cuts = np.unique(cuts[(cuts >= lo) & (cuts < hi)])
        rights = np.append(cuts, hi)
        counts = (a.size - np.searchsorted(a, rights, side="left")) + np.searchsorted(t, rights, side="left")
        return cls(lo, hi, cuts, weight * counts).coalesce()

    # ---- evaluation ----

    def __call__(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        if np.any(tau_arr < self.lo) or np.any(tau_arr > self.hi) or np.any(np.isnan(tau_arr)):
            raise ContractError(f"tau outside the domain [{self.lo}, {self.hi}]")
        out = self.values[np.searchsorted(self.breakpoints, tau_arr, side="left")]
        return float(out) if out.ndim == 0 else out

    @property
    def lefts(self) -> np.ndarray:
        return np.concatenate([[self.lo], self.breakpoints])

    @property
    def rights(self) -> np.ndarray:
        return np.concatenate([self.breakpoints, [self.hi]])

    @property
    def lengths(self) -> np.ndarray:
        return self.rights - self.lefts

    def pieces(self):
        return list(zip(self.lefts.tolist(), self.rights.tolist(), self.values.tolist()))

    def max(self) -> float:
        return float(np.max(self.values))

    def min(self) -> float:
        return float(np.min(self.values))

    def argmax(self) -> float:
        """A point attaining the maximum: the right end of the first best piece."""
        return float(self.rights[int(np.argmax(self.values))])

    def argmin(self) -> float:
        return float(self.rights[int(np.argmin(self.values))])

    def integral(self) -> float:
        return float(np.sum(self.lengths * self.values))

    # ---- arithmetic ----

    def coalesce(self) -> "PiecewiseConstantFn":
        """Merge neighbours with exactly equal values."""
        if self.breakpoints.size == 0:
            return self
        keep = self.values[1:] != self.values[:-1]
        vals = np.concatenate([[self.values[0]], self.values[1:][keep]])
        return PiecewiseConstantFn(self.lo, self.hi, self.breakpoints[keep], vals)

    def restrict(self, lo, hi) -> "PiecewiseConstantFn":
        if lo < self.lo or hi > self.hi or not lo < hi:
            raise ContractError("restriction must lie inside the domain")
        b = self.breakpoints[(self.breakpoints >= lo) & (self.breakpoints < hi)]
        vals = self(np.append(b, hi))
        return PiecewiseConstantFn(lo, hi, b, np.atleast_1d(vals))

    def _combine(self, other, op) -> "PiecewiseConstantFn":
        if isinstance(other, PiecewiseConstantFn):
            if other.lo > self.lo or other.hi < self.hi:
                raise ContractError("other function must cover this domain")
            b = np.union1d(self.breakpoints,
                           other.breakpoints[(other.breakpoints >= self.lo) & (other.breakpoints < self.hi)])
            rights = np.append(b, self.hi)
            vals = op(np.atleast_1d(self(rights)), np.atleast_1d(other(rights)))
            return PiecewiseConstantFn(self.lo, self.hi, b, vals).coalesce()
        return PiecewiseConstantFn(self.lo, self.hi, self.breakpoints,
                                   op(self.values, float(other))).coalesce()

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, k):
        return self._combine(k, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def clip(self, lo, hi) -> "PiecewiseConstantFn":
        return PiecewiseConstantFn(self.lo, self.hi, self.breakpoints,
                                   np.clip(self.values, lo, hi)).coalesce()

    def map(self, fn) -> "PiecewiseConstantFn":
        return PiecewiseConstantFn(self.lo, self.hi, self.breakpoints,
                                   np.asarray(fn(self.values), dtype=float)).coalesce()

    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def is_nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    def probe_points(self, eps: float | None = None) -> np.ndarray:
        """lo, hi, every breakpoint and a point just right of each (for brute-force checks)."""
        if eps is None:
            eps = 1e-9 * (self.hi - self.lo)
        b = self.breakpoints
        right = np.minimum(b + eps, self.hi)
        return np.unique(np.concatenate([[self.lo, self.hi], b, right]))

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi,
                "breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PiecewiseConstantFn":
        return cls(d["lo"], d["hi"], d["breakpoints"], d["values"])
