"""Hitting-time densities of h-transformed Brownian motion.

For dX = (h_x / h)(t, X) dt + dB with h a positive backward-heat solution:

* unbounded state space, moving boundary b(u):
      q(u) = h(u, b(u)) / h(0, y) * p_b(u),
  with p_b the Brownian first-passage density to b;
* state space (0, a) below a constant barrier a, Brownian paths killed at 0:
      q(u) = h(u, a) / h(0, y) * P_y(T_a in du, T_a < T_0) / du.

Densities are generally defective (bridges absorbed at the pin, drifted
paths escaping); the missing mass is reported as ``defect``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, interpolate

from . import brownian_fpt as bf
from .errors import DomainError, PreconditionError
from .heat_solutions import HeatSolution

U_MIN = 1e-10  # density is taken as 0 below this time
PIN_GAP = 1e-9  # support of pinned processes ends at s - PIN_GAP
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class ProcessSpec:
    """dX = sum_j (h_j)_x / h_j (t, X) dt + dB started at y.

    The number of components is the process's class index.
    """

    name: str
    y: float
    components: tuple[HeatSolution, ...]
    horizon: float = math.inf
    absorbing_floor: float | None = None

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise PreconditionError("a process needs at least one heat solution component")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "y", float(self.y))
        for h in comps:
            if not bool(h.in_domain(0.0, self.y)):
                raise DomainError(f"start y={self.y} is not interior to the domain of {h.describe()}")
        if not math.isfinite(float(self.drift(0.0, self.y))):
            raise DomainError("drift is not finite at (0, y)")
        pins = [h.pin_time for h in comps if h.pin_time is not None]
        horizon = min([self.horizon, *pins])
        if not horizon > 0:
            raise PreconditionError("process horizon must be positive")
        object.__setattr__(self, "horizon", float(horizon))
        if self.absorbing_floor is None and any(h.half_line for h in comps):
            object.__setattr__(self, "absorbing_floor", 0.0)

    @classmethod
    def single(cls, h: HeatSolution, y: float, name: str | None = None, horizon: float = math.inf):
        return cls(name or h.describe(), y, (h,), horizon)

    @property
    def class_index(self) -> int:
        return len(self.components)

    @property
    def pin_time(self) -> float | None:
        pins = [h.pin_time for h in self.components if h.pin_time is not None]
        return min(pins) if pins else None

    def drift(self, t, x):
        total = self.components[0].drift(t, x)
        for h in self.components[1:]:
            total = total + h.drift(t, x)
        return total


class FptDensity:
    """A (possibly defective) hitting-time density on [0, horizon).

    The CDF is tabulated once at construction with 8-point Gauss-Legendre
    panels (uniform, plus geometric refinement next to u = 0); ``cdf`` then
    integrates only the partial panel.  For an unbounded horizon the table
    stops at ``table_end`` and the tail is handled by adaptive quadrature.
    """

    def __init__(self, fn: Callable, horizon: float, meta: dict | None = None,
                 panels: int = 4000, table_end: float | None = None):
        if not horizon > 0:
            raise PreconditionError("density horizon must be positive")
        self._fn = fn
        self.horizon = float(horizon)
        self.meta = dict(meta or {})
        end = self.horizon if math.isfinite(self.horizon) else float(table_end or 50.0)
        end = min(end, self.horizon)
        uniform = np.linspace(0.0, end, panels + 1)
        near_zero = np.geomspace(U_MIN, uniform[1], 80)
        self._nodes = np.unique(np.concatenate([uniform, near_zero]))
        self._table_end = end
        lo, hi = self._nodes[:-1], self._nodes[1:]
        pieces = self._gl(lo, hi)
        self._cum = np.concatenate([[0.0], np.cumsum(pieces)])
        total = self._cum[-1]
        if math.isinf(self.horizon):
            total += integrate.quad(self._scalar, end, math.inf, limit=200, epsabs=1e-10)[0]
        self.total_mass = float(total)
        self.defect = 1.0 - self.total_mass
        if not (-1e-6 <= self.defect <= 1.0 + 1e-12):
            raise PreconditionError(f"density mass {self.total_mass:.8g} outside [0, 1]")

    def _scalar(self, u):
        return float(self(u))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u > self.horizon):
            raise DomainError(f"density evaluated outside [0, {self.horizon:g}]")
        out = np.zeros(u.shape)
        mask = u >= U_MIN
        if np.any(mask):
            out[mask] = self._fn(u[mask])
        return out[()]

    def _gl(self, lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = np.asarray(self(pts.ravel())).reshape(pts.shape)
        return half * (vals @ _GL_W)

    def cdf(self, t):
        """int_0^t q(u) du; monotone, equal to 1 - defect at the horizon."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon):
            raise DomainError(f"cdf evaluated outside [0, {self.horizon:g}]")
        flat = t.ravel()
        out = np.empty(flat.shape)
        inside = flat <= self._table_end
        ti = flat[inside]
        idx = np.clip(np.searchsorted(self._nodes, ti, side="right") - 1, 0, len(self._nodes) - 2)
        left = self._nodes[idx]
        out[inside] = self._cum[idx] + self._gl(left, ti)
        for j in np.flatnonzero(~inside):
            out[j] = self._cum[-1] + integrate.quad(self._scalar, self._table_end, flat[j], limit=200)[0]
        return out.reshape(t.shape)[()]

    def describe(self) -> str:
        return ", ".join(f"{k}={v}" for k, v in self.meta.items())


def cdf(d: FptDensity, t):
    return d.cdf(t)


def _start_ratio(h: HeatSolution, y: float) -> float:
    if not bool(h.in_domain(0.0, y)):
        raise DomainError(f"start y={y} outside the domain of {h.describe()}")
    log_h0 = float(h.log_value(0.0, y))
    if not math.isfinite(log_h0):
        raise DomainError(f"h(0, y) = 0 for {h.describe()} at y={y}")
    return log_h0


def _support_end(h: HeatSolution, *limits: float) -> float:
    end = min(limits)
    if h.pin_time is not None:
        end = min(end, h.pin_time - PIN_GAP)
    if not end > 0:
        raise PreconditionError("empty support")
    return end


def unbounded_fpt_density(h: HeatSolution, y: float, bnd: bf.MovingBoundary,
                          horizon: float = math.inf, steps: int = 2000) -> FptDensity:
    """Density of the first time X hits b(u) = a + int_0^u f', from y != a."""
    y = float(y)
    if bnd.a == y:
        raise PreconditionError("boundary starts at the process (a == y)")
    log_h0 = _start_ratio(h, y)
    end = _support_end(h, bnd.horizon, horizon)
    if h.half_line and bnd.a > y:
        # paths may be killed at 0 before reaching b: state space is bounded
        raise DomainError("half-line process below the boundary: use bounded_fpt_density")

    if math.isinf(end):
        if not bnd.is_affine:
            raise PreconditionError("an unbounded horizon needs an affine boundary")
        c = bnd.affine_slope
        if h.half_line and (bnd.a <= 0 or c < 0):
            raise DomainError("boundary leaves the half-line domain of " + h.describe())
    else:
        probe = np.linspace(0.0, end, 1001)
        if not np.all(h.in_domain(probe, bnd(probe))):
            raise DomainError("boundary leaves the domain of " + h.describe())

    if bnd.is_affine:
        c = bnd.affine_slope

        def brownian(u):
            return bf.affine_boundary_density(y, bnd.a, c, u)

        method = "closed_form"
    else:
        grid = bf.uniform_grid(end, steps)
        p = bf.volterra_fpt_density(bnd, y, grid)
        spline = interpolate.CubicSpline(np.concatenate([[0.0], grid]), np.concatenate([[0.0], p]))

        def brownian(u):
            return np.maximum(spline(u), 0.0)

        method = "volterra"

    def q(u):
        with np.errstate(under="ignore"):
            ratio = np.exp(h.log_value(u, bnd(u)) - log_h0)
        return ratio * brownian(u)

    meta = {"process": h.describe(), "y": y, "boundary": bnd.label, "method": method}
    table_end = None
    if math.isinf(end):
        scale = abs(bnd.a - y)
        table_end = max(50.0, 50.0 * scale * scale)
    return FptDensity(q, end, meta, table_end=table_end)


def bounded_fpt_density(h: HeatSolution, y: float, a: float, horizon: float,
                        sp: bf.SeriesParams = bf.DEFAULT_SERIES) -> FptDensity:
    """Density of the first time X hits the constant level a from y in (0, a).

    The h-transform of Brownian motion killed at 0 only sees paths that reach
    a before 0, so the Brownian factor is the upper-before-lower image series.
    """
    y, a = float(y), float(a)
    if not (0 < y < a):
        raise PreconditionError(f"bounded case needs 0 < y < a, got y={y}, a={a}")
    log_h0 = _start_ratio(h, y)
    end = _support_end(h, horizon)
    if math.isinf(end):
        end = bf.series_cutoff(a)
    if not np.all(h.in_domain(np.linspace(0.0, end, 101), a)):
        raise DomainError(f"level a={a} is outside the domain of {h.describe()}")

    def q(u):
        with np.errstate(under="ignore"):
            ratio = np.exp(h.log_value(u, a) - log_h0)
        return ratio * bf.upper_before_lower_density(0.0, y, u, a, sp)

    meta = {"process": h.describe(), "y": y, "boundary": f"{a:g} (from below)", "method": "series"}
    return FptDensity(q, end, meta)
