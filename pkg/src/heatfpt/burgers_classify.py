"""Burgers-equation checks and the B^n classification of drifts.

A drift mu is of class B^n when it is a sum of n log-derivatives of positive
backward-heat solutions; each such term solves Burgers' equation

    -mu_t = mu_xx / 2 + mu mu_x,

but their sums generally do not, which is what separates B^2 from B^1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, PreconditionError
from .heat_polynomials import IdentityReport, check_poly_identities
from .heat_solutions import HeatSolution, Kind, make_catalog_solution

FD_STEP = 1e-5


@dataclass(frozen=True)
class DriftSpec:
    """A drift mu(t, x) with analytic x-derivative on a (t, x) rectangle.

    ``domain`` is ((t_lo, t_hi), (x_lo, x_hi)); probes must be interior.
    """

    mu: Callable
    mu_x: Callable
    domain: tuple[tuple[float, float], tuple[float, float]]
    description: str = ""

    def __post_init__(self):
        (t0, t1), (x0, x1) = self.domain
        if not (t0 < t1 and x0 < x1):
            raise PreconditionError(f"empty drift domain {self.domain}")
        g = self.probe_grid()
        if not np.all(np.isfinite(self.mu(g[:, 0], g[:, 1]))):
            raise PreconditionError(f"drift {self.description!r} is not finite on its probe grid")

    @classmethod
    def from_solutions(cls, parts: Sequence[HeatSolution], domain=None, description: str | None = None):
        """Drift sum_j (h_j)_x / h_j; the default domain is the parts' standard grid box."""
        parts = tuple(parts)
        if not parts:
            raise PreconditionError("need at least one heat solution")
        if domain is None:
            domain = default_domain(parts)

        def mu(t, x):
            return sum(h.drift(t, x) for h in parts)

        def mu_x(t, x):
            return sum(h.drift_dx(t, x) for h in parts)

        desc = description or " + ".join(h.describe() for h in parts)
        return cls(mu, mu_x, domain, desc)

    def probe_grid(self, n: int = 20) -> np.ndarray:
        """n x n grid strictly inside the domain (5 % margins), shape (n*n, 2)."""
        (t0, t1), (x0, x1) = self.domain
        mt, mx = 0.05 * (t1 - t0), 0.05 * (x1 - x0)
        tt, xx = np.meshgrid(np.linspace(t0 + mt, t1 - mt, n), np.linspace(x0 + mx, x1 - mx, n), indexing="ij")
        return np.column_stack([tt.ravel(), xx.ravel()])

    def contains(self, t, x) -> np.ndarray:
        (t0, t1), (x0, x1) = self.domain
        return (t >= t0) & (t <= t1) & (x >= x0) & (x <= x1)


def default_domain(parts) -> tuple[tuple[float, float], tuple[float, float]]:
    """Box of the standard probe grid shared by ``parts``."""
    t_hi = min([0.75 * h.pin_time for h in parts if h.pin_time is not None] or [1.0])
    half = any(h.half_line for h in parts)
    return ((0.0, t_hi), (0.5, 3.0) if half else (-3.0, 3.0))


def _as_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).reshape(-1, 2)
    if g.size == 0:
        raise PreconditionError("empty grid")
    return g


def burgers_residual(d: DriftSpec, grid=None, normalize: bool = True) -> float:
    """max |mu_t + mu_xx / 2 + mu mu_x| over the grid, divided by 1 + mu^2 when ``normalize``.

    mu_t is a central difference of mu (one-sided at t = 0); mu_xx a central
    difference of the analytic mu_x; both use step 1e-5.
    """
    g = d.probe_grid() if grid is None else _as_grid(grid)
    t, x = g[:, 0], g[:, 1]
    if not np.all(d.contains(t, x)):
        raise DomainError(f"grid point outside the domain of {d.description!r}")
    e = FD_STEP
    mu = np.asarray(d.mu(t, x), dtype=float)
    mu_t = (np.asarray(d.mu(t + e, x)) - np.asarray(d.mu(np.maximum(t - e, 0.0), x))) / (t + e - np.maximum(t - e, 0.0))
    mu_x = np.asarray(d.mu_x(t, x), dtype=float)
    mu_xx = (np.asarray(d.mu_x(t, x + e)) - np.asarray(d.mu_x(t, x - e))) / (2 * e)
    res = np.abs(mu_t + 0.5 * mu_xx + mu * mu_x)
    if normalize:
        res = res / (1.0 + mu * mu)
    return float(res.max())


@dataclass(frozen=True)
class BesselClass:
    order: int
    class_index: int
    components: tuple[HeatSolution, ...]
    degenerate: bool  # order 1: driftless, index 0 lies outside B^n, n >= 1

    def describe(self) -> str:
        note = " (driftless; index 0 is an extension)" if self.degenerate else ""
        return f"Bessel order {self.order}: class B^{self.class_index}{note}"


def classify_bessel_order(m: int) -> BesselClass:
    """Odd-order Bessel process of order m = 2n + 1 -> class index n.

    Its drift n / x is n copies of the linear_x log-derivative.
    """
    if int(m) != m:
        raise PreconditionError(f"Bessel order must be an integer, got {m}")
    m = int(m)
    if m < 1:
        raise PreconditionError(f"Bessel order must be at least 1, got {m}")
    if m % 2 == 0:
        raise PreconditionError(f"even Bessel order {m} is not covered (odd orders 2n+1 only)")
    n = (m - 1) // 2
    k = make_catalog_solution(Kind.LINEAR_X)
    return BesselClass(m, n, (k,) * n, n == 0)


def verify_decomposition(target: HeatSolution, parts: Sequence[HeatSolution], grid=None) -> float:
    """max over the grid of |target_x / target - sum part_x / part|."""
    parts = tuple(parts)
    if not parts:
        raise PreconditionError("need at least one part")
    g = _as_grid(grid) if grid is not None else DriftSpec.from_solutions((target, *parts)).probe_grid()
    t, x = g[:, 0], g[:, 1]
    for h in (target, *parts):
        if not np.all(h.in_domain(t, x)):
            raise DomainError("grid point outside the domain of " + h.describe())
    diff = target.drift(t, x) - sum(h.drift(t, x) for h in parts)
    return float(np.max(np.abs(diff)))


def wn_drift_recursion_check(n: int, points) -> IdentityReport:
    """Log-derivative chains of the associated functions w_1..w_n.

    Returns the full identity report; ``log_chain`` and ``ratio_chain`` are
    the two recursions for w_n'/w_n.
    """
    if int(n) != n or n < 1:
        raise PreconditionError(f"n must be a positive integer, got {n}")
    return check_poly_identities(int(n), points)


def bessel_drift(m: int) -> DriftSpec:
    """Drift (m - 1) / (2x) of the Bessel process of order m on x in [0.5, 3]."""
    c = 0.5 * (m - 1)
    return DriftSpec(lambda t, x: c / x, lambda t, x: -c / x**2, ((0.0, 1.0), (0.5, 3.0)), f"bessel order {m}")
