"""Closed-form robustness bounds and the two-segment toy model.

Unspecified absolute constants are explicit arguments defaulting to 1; any
value that depends on them is an order-of-magnitude figure, not a
calibrated one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import ConfigError, ContractError, DimensionError
from .geometry import log_beta


@dataclass(frozen=True)
class BoundInputs:
    m: int
    tau: float
    r: float
    n2: int
    n3: int
    c_const: float = 1.0
    c0_const: float = 0.5

    def __post_init__(self):
        if self.m < 1 or self.tau < 0 or self.r <= 0:
            raise ContractError("need m >= 1, tau >= 0, r > 0")
        if not 1 <= self.n3 < self.n2:
            raise DimensionError("need 1 <= n3 < n2")
        if self.c_const <= 0 or not 0 < self.c0_const < 1:
            raise ConfigError("need c > 0 and 0 < c0 < 1")

    @property
    def small_tau(self) -> bool:
        """Whether tau is below r * sqrt(1 - n3/n2), where the bound is meaningful."""
        return self.tau < self.r * math.sqrt(1.0 - self.n3 / self.n2)


def thm2_bound(b: BoundInputs) -> float:
    """m (c tau / (r sqrt(1 - n3/n2)))^(n2-n3) + m c0^(n2-n3), in log space."""
    k = b.n2 - b.n3
    second = math.exp(math.log(b.m) + k * math.log(b.c0_const))
    if b.tau == 0:
        return second
    ratio = math.log(b.c_const * b.tau) - math.log(b.r) - 0.5 * math.log(1.0 - b.n3 / b.n2)
    return math.exp(math.log(b.m) + k * ratio) + second


def improved_bound(m: int, tau: float, r: float, n2: int, n3: int) -> float:
    """(m / (n2-n3)) (tau/r)^(n2-n3) / B(n3/2, (n2-n3)/2), constants set to 1."""
    if not 1 <= n3 < n2:
        raise DimensionError("need 1 <= n3 < n2")
    if tau < 0 or r <= 0:
        raise ContractError("need tau >= 0 and r > 0")
    if tau >= r:
        warnings.warn("tau >= r: outside the range where this bound is meaningful", stacklevel=2)
    if tau == 0:
        return 0.0
    k = n2 - n3
    return math.exp(math.log(m) - math.log(k) + k * math.log(tau / r) - log_beta(n3 / 2.0, k / 2.0))


def toy_abstention(tau: float, D: float, m: int) -> float:
    """Abstention rate of the two-segment model with m training points per class."""
    if tau < 0:
        raise ContractError("tau must be nonnegative")
    if tau > D:
        return 0.0
    first = 2.0 * (1.0 - tau / D) ** (m + 1)
    second = (m - 1) * (1.0 - 2.0 * tau / D) ** (m + 1) if tau <= D / 2 else 0.0
    return (first + second) / (m + 1)


CONVENTIONS = ("directed_ray", "full_line")


def _toy_attack_slope(D: float, r: float, m: int, convention: str) -> float:
    """Leading-order robust error per unit tau: (k / (pi r)) (1 - mean_gap / r).

    mean_gap = D (m+3) / (2 (m+1)) is the expected distance from a test
    point to the far end of its segment plus the nearest opposite training
    point's offset into its own segment. k = 1 for a ray, 2 for a full line.
    """
    if convention not in CONVENTIONS:
        raise ConfigError(f"convention must be one of {CONVENTIONS}")
    k = 1.0 if convention == "directed_ray" else 2.0
    mean_gap = D * (m + 3) / (2.0 * (m + 1))
    return k / (math.pi * r) * (1.0 - mean_gap / r)


def toy_robust_accuracy(tau: float, D: float, r: float, m: int,
                        convention: str = "directed_ray") -> float:
    if tau < 0 or tau > D:
        raise ContractError("formula holds for 0 <= tau <= D")
    return 1.0 - tau * _toy_attack_slope(D, r, m, convention)


def toy_g(tau: float, D: float, r: float, m: int, c: float,
          convention: str = "directed_ray") -> float:
    """Leading-order robust error + c * abstention for tau in [0, D]."""
    return tau * _toy_attack_slope(D, r, m, convention) + c * toy_abstention(tau, D, m)


def toy_g_derivative(tau: float, D: float, r: float, m: int, c: float,
                     convention: str = "directed_ray") -> float:
    a = _toy_attack_slope(D, r, m, convention)
    half = (1.0 - 2.0 * tau / D) ** m if tau <= D / 2 else 0.0
    return a - (2.0 * c / D) * ((1.0 - tau / D) ** m + (m - 1) * half)


def toy_tau_scale(D: float, r: float, m: int, c: float) -> float:
    """D log(pi c r m / D) / m, the order of the optimal threshold."""
    return D * math.log(math.pi * c * r * m / D) / m


@dataclass(frozen=True)
class ToyOptimum:
    tau: float
    scale: float
    ratio: float
    zero_case: bool


def toy_optimal_tau(D: float, r: float, m: int, c: float, convention: str = "directed_ray",
                    rtol: float = 1e-10) -> float:
    return toy_optimal_tau_report(D, r, m, c, convention, rtol).tau


def toy_optimal_tau_report(D: float, r: float, m: int, c: float,
                           convention: str = "directed_ray", rtol: float = 1e-10) -> ToyOptimum:
    """Minimiser of the leading-order g on [0, D/2).

    Returns 0 when pi c r / D <= 1/m. Otherwise g' is increasing on
    (0, D/2), and its root is found by bisection.
    """
    if D <= 0 or r <= 0 or c <= 0 or m < 1:
        raise ContractError("need D, r, c > 0 and m >= 1")
    beta = math.pi * c * r / D
    scale = toy_tau_scale(D, r, m, c) if beta * m > 1 else float("nan")
    if beta <= 1.0 / m:
        return ToyOptimum(0.0, scale, 0.0, True)
    lo, hi = 0.0, D / 2.0
    f_lo = toy_g_derivative(lo, D, r, m, c, convention)
    f_hi = toy_g_derivative(hi, D, r, m, c, convention)
    if not (f_lo < 0 < f_hi):
        raise ConfigError(f"no sign change of g' on [0, D/2] (g'(0)={f_lo:.3e}, "
                          f"g'(D/2)={f_hi:.3e}); parameters outside the asymptotic regime")
    while hi - lo > rtol * D:
        mid = 0.5 * (lo + hi)
        if toy_g_derivative(mid, D, r, m, c, convention) < 0:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    return ToyOptimum(tau, scale, tau / scale, False)


def lipschitz_bound_eadv(m: int, r: float, n2: int, n3: int) -> float:
    """m^((n3+1)/n2) / r^(n2-n3), constants set to 1."""
    if not 1 <= n3 < n2:
        raise DimensionError("need 1 <= n3 < n2")
    return m ** ((n3 + 1) / n2) / r ** (n2 - n3)


def discontinuity_rate_bound(kappa: float, m: int, n2: int, test_size: int, w: float) -> float:
    """kappa m^(1/n2) |T| w, constants set to 1."""
    if w < 0:
        raise ContractError("window width must be nonnegative")
    return kappa * m ** (1.0 / n2) * test_size * w


def coverage_sample_bound(n2: int, N: int, beta: float) -> int:
    """ceil((n2 N / beta) log(n2 N / beta)), constant set to 1."""
    if N < 1 or not 0 < beta < 1:
        raise ContractError("need N >= 1 and 0 < beta < 1")
    q = n2 * N / beta
    return int(math.ceil(q * math.log(q)))
