"""First-passage densities of standard Brownian motion.

Closed forms for a constant or affine barrier, the method-of-images series for
exit from an interval (0, a) (switching to the equivalent eigenfunction
expansion for t > a^2), and a second-kind Volterra solver for a general
C^2 moving boundary b(t) = a + int_0^t f'(u) du.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, interpolate
from scipy.special import zeta

from .errors import NumericalError, PreconditionError, TruncationError

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
_ZETA_MINUS_HALF = float(zeta(-0.5))
_KNOTS = 4096


@dataclass(frozen=True)
class MovingBoundary:
    """b(t) = a + cumulative(t), with slope = b'.

    Build with :meth:`affine` or :meth:`from_slope`; the raw constructor is for
    boundaries whose running integral is known in closed form.
    """

    a: float
    slope: Callable
    cumulative: Callable
    horizon: float = math.inf
    affine_slope: float | None = None
    label: str = "custom"

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise PreconditionError("boundary level must be finite")
        if not self.horizon > 0:
            raise PreconditionError("boundary horizon must be positive")
        if abs(float(self.cumulative(0.0))) > 1e-12:
            raise PreconditionError("cumulative(0) must be 0 so that b(0) = a")
        if math.isfinite(self.horizon):
            probe = np.linspace(0.0, self.horizon, 1000)
            if not np.all(np.isfinite(np.asarray(self.slope(probe), dtype=float))):
                raise PreconditionError("boundary slope is not finite on [0, horizon]")

    @classmethod
    def affine(cls, a: float, c: float = 0.0, horizon: float = math.inf) -> "MovingBoundary":
        c = float(c)
        return cls(
            a=float(a),
            slope=lambda t: np.full(np.shape(t), c)[()],
            cumulative=lambda t: c * np.asarray(t, dtype=float),
            horizon=horizon,
            affine_slope=c,
            label=f"{a:g}{c:+g}*t",
        )

    @classmethod
    def from_slope(cls, a: float, slope: Callable, horizon: float, label: str = "custom") -> "MovingBoundary":
        """Integrate ``slope`` once on a 4096-knot grid, then interpolate cubically."""
        if not math.isfinite(horizon):
            raise PreconditionError("a general slope needs a finite horizon")
        probe = np.linspace(0.0, horizon, 1000)
        if not np.all(np.isfinite([float(slope(u)) for u in probe])):
            raise PreconditionError("boundary slope is not finite on [0, horizon]")
        knots = np.linspace(0.0, horizon, _KNOTS + 1)
        with warnings.catch_warnings():
            # quad warns instead of failing on a singular integrand
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                pieces = [
                    integrate.quad(lambda u: float(slope(u)), lo, hi, epsabs=1e-12, epsrel=1e-10)[0]
                    for lo, hi in zip(knots[:-1], knots[1:])
                ]
            except integrate.IntegrationWarning:
                pieces = [math.nan]
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        if not np.all(np.isfinite(cum)):
            raise PreconditionError("boundary slope is not integrable on [0, horizon]")
        spline = interpolate.CubicSpline(knots, cum)
        return cls(a=float(a), slope=slope, cumulative=lambda t: spline(t)[()], horizon=horizon, label=label)

    @property
    def is_affine(self) -> bool:
        return self.affine_slope is not None

    def __call__(self, t):
        return self.a + self.cumulative(t)

    def curvature(self, t, step: float = 1e-5):
        """b'' by central difference of the slope (one-sided near t = 0)."""
        if self.is_affine:
            return np.zeros(np.shape(t))[()]
        t = np.asarray(t, dtype=float)
        lo = np.maximum(t - step, 0.0)
        hi = t + step
        return ((self.slope(hi) - self.slope(lo)) / (hi - lo))[()]


@dataclass(frozen=True)
class SeriesParams:
    """Truncation controls for the image series."""

    tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        if not self.tol > 0:
            raise PreconditionError("series tolerance must be positive")
        if self.max_terms < 1:
            raise PreconditionError("max_terms must be at least 1")


DEFAULT_SERIES = SeriesParams()


def _positive(name, v):
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0)):
        raise PreconditionError(f"{name} must be positive")
    return v


def _clamp(values, what):
    values = np.asarray(values, dtype=float)
    if np.any(values < -1e-12):
        raise NumericalError(f"{what} returned a negative density ({values.min():.3g})")
    return np.maximum(values, 0.0)[()]


def constant_barrier_density(y, t):
    """Density of the first time Brownian motion started at y > 0 hits 0."""
    y = _positive("y", y)
    t = _positive("t", t)
    return (y / np.sqrt(2 * np.pi * t**3) * np.exp(-y * y / (2 * t)))[()]


def affine_boundary_density(y, a, c, t):
    """Density of the first time Brownian motion from y hits the line a + c t.

    Bachelier-Levy: |a - y| (2 pi t^3)^(-1/2) exp(-(a - y + c t)^2 / 2t).
    Defective when the line runs away from the start.
    """
    y, a, c = float(y), float(a), float(c)
    if a == y:
        raise PreconditionError("boundary starts at the process (a == y)")
    t = _positive("t", t)
    gap = a - y
    return (abs(gap) / np.sqrt(2 * np.pi * t**3) * np.exp(-((gap + c * t) ** 2) / (2 * t)))[()]


def _image_series(offsets: Callable, t, sp: SeriesParams):
    """sum_{n in Z} sum_{m in offsets(n)} m (2 pi t^3)^(-1/2) exp(-m^2 / 2t).

    Summed symmetrically outward from n = 0; stops once the newest pair of
    terms is below tol times the accumulated absolute sum.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    log_pref = -1.5 * np.log(t) - _LOG_SQRT_2PI

    def terms(n):
        out = np.zeros_like(t)
        for m in offsets(n):
            if m == 0:
                continue
            expo = log_pref - m * m / (2 * t) + math.log(abs(m))
            # exp underflows below -745; such terms are exactly skipped
            out += math.copysign(1.0, m) * np.where(expo > -745.0, np.exp(np.maximum(expo, -745.0)), 0.0)
        return out

    total = terms(0)
    absum = np.abs(total)
    for n in range(1, sp.max_terms + 1):
        new = terms(n) + terms(-n)
        total += new
        absum += np.abs(terms(n)) + np.abs(terms(-n))
        if np.all(np.abs(new) < sp.tol * (absum + 1e-300)) and n >= 2:
            return total
    raise TruncationError(f"image series did not converge in {sp.max_terms} terms (t up to {t.max():g})")


def _sine_series(weight: Callable, y: float, a: float, t, sp: SeriesParams):
    """sum_k weight(k) sin(k pi y / a) (k pi / a^2) exp(-k^2 pi^2 t / 2a^2).

    The eigenfunction form of the same densities; it converges quickly
    (and without cancellation) once t is of order a^2.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    total = np.zeros_like(t)
    absum = np.zeros_like(t)
    for k in range(1, sp.max_terms + 1):
        w = weight(k) * math.sin(k * math.pi * y / a)
        envelope = k * math.pi / (a * a) * np.exp(-((k * math.pi / a) ** 2) * t / 2)
        total += w * envelope
        absum += abs(w) * envelope
        # |sin| <= 1 bounds every later term by the envelope
        if k >= 2 and np.all(envelope < sp.tol * (absum + 1e-300)):
            return total
    raise TruncationError(f"eigenfunction series did not converge in {sp.max_terms} terms")


def _interval_density(images: Callable, weight: Callable, y: float, a: float, t, sp: SeriesParams, what: str):
    """Images for t <= a^2, eigenfunctions beyond; both represent the same density."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    small = t <= a * a
    if np.any(small):
        out[small] = _image_series(images, t[small], sp)
    if np.any(~small):
        out[~small] = _sine_series(weight, y, a, t[~small], sp)
    return _clamp(out, what)


def _check_interval(y, a):
    if not (0 < y < a):
        raise PreconditionError(f"need 0 < y < a, got y={y}, a={a}")


def two_sided_first_exit_density(y: float, a: float, t, sp: SeriesParams = DEFAULT_SERIES):
    """Density of the first exit time of Brownian motion from (0, a), started at y."""
    y, a = float(y), float(a)
    _check_interval(y, a)
    t = _positive("t", t)
    val = _interval_density(lambda n: (2 * n * a + y, 2 * n * a + a - y), lambda k: 1 - (-1) ** k,
                            y, a, t, sp, "two-sided exit series")
    return float(val[0]) if t.ndim == 0 else val


def lower_before_upper_density(y: float, a: float, t, sp: SeriesParams = DEFAULT_SERIES):
    """Density of hitting 0 at t without having touched a, started at y in (0, a)."""
    y, a = float(y), float(a)
    _check_interval(y, a)
    t = _positive("t", t)
    val = _interval_density(lambda n: (2 * n * a + y,), lambda k: 1, y, a, t, sp, "lower-first series")
    return float(val[0]) if t.ndim == 0 else val


def upper_before_lower_density(t, y: float, s, a: float, sp: SeriesParams = DEFAULT_SERIES):
    """Density in s of hitting a at time s without having touched 0, from y at time t."""
    y, a = float(y), float(a)
    _check_interval(y, a)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(~(s > t)):
        raise PreconditionError("need s > t >= 0")
    lag = s - t
    val = _interval_density(lambda n: (2 * n * a + a - y,), lambda k: -((-1) ** k), y, a, lag, sp,
                            "upper-first series")
    return float(val[0]) if lag.ndim == 0 else val


def series_cutoff(a: float, eps: float = 1e-15) -> float:
    """Time beyond which the exit-from-(0, a) survival is below eps.

    Uses the spectral bound P(exit > t) <= (4/pi) exp(-pi^2 t / (2 a^2)).
    """
    return 2 * a * a / math.pi**2 * math.log(4 / (math.pi * eps))


def uniform_grid(horizon: float, steps: int = 2000) -> np.ndarray:
    """Volterra grid t_j = j * horizon / steps for j = 1..steps."""
    if not (math.isfinite(horizon) and horizon > 0):
        raise PreconditionError("Volterra grid needs a finite positive horizon")
    if steps < 1:
        raise PreconditionError("need at least one step")
    return np.arange(1, steps + 1) * (horizon / steps)


def volterra_fpt_density(bnd: MovingBoundary, y: float, grid, singular_correction: bool = True) -> np.ndarray:
    """First-passage density of Brownian motion from y to b(t), sampled on ``grid``.

    Solves the second-kind equation

        p(t) = -2 sg Psi(t, 0, y) + 2 sg int_0^t p(r) Psi(t, r, b(r)) dr,
        Psi(t, r, z) = [b'(t) - (b(t) - z) / (t - r)] phi_{t-r}(b(t) - z) / 2,

    where sg = +1 when the boundary starts above y and -1 when below.  The
    grid must be uniform, t_j = j h.  The kernel vanishes on the diagonal but
    behaves like b''(t) (t - r)^(1/2) / (4 sqrt(2 pi)) next to it; with
    ``singular_correction`` the trapezoid rule is corrected for that term by
    its zeta(-1/2) h^(3/2) Euler-Maclaurin coefficient, which restores
    second-order convergence.  For affine boundaries the kernel is identically
    zero and the solution is the closed form.
    """
    y = float(y)
    b0 = float(bnd(0.0))
    if b0 == y:
        raise PreconditionError("boundary starts at the process (b(0) == y)")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise PreconditionError("grid must be a nonempty 1-d sequence")
    h = grid[0]
    if not h > 0 or np.any(np.diff(grid) <= 0):
        raise PreconditionError("grid must be increasing and start at t1 > 0")
    if not np.allclose(grid, h * np.arange(1, grid.size + 1), rtol=1e-9, atol=0):
        raise PreconditionError("Volterra grid must be uniform with t_j = j * t_1")
    if grid[-1] > bnd.horizon * (1 + 1e-12):
        raise PreconditionError("grid extends beyond the boundary horizon")

    sg = 1.0 if b0 > y else -1.0
    t = np.concatenate([[0.0], grid])
    b = np.asarray(bnd(t), dtype=float)
    db = np.asarray(bnd.slope(t), dtype=float)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(db))):
        raise NumericalError("boundary or its slope is not finite on the grid")
    kappa = np.asarray(bnd.curvature(t), dtype=float) / (4 * math.sqrt(2 * math.pi))

    n = grid.size
    p = np.zeros(n + 1)
    for k in range(1, n + 1):
        tk = t[k]
        gap0 = b[k] - y
        src = 0.5 * (db[k] - gap0 / tk) * math.exp(-gap0 * gap0 / (2 * tk)) / math.sqrt(2 * math.pi * tk)
        lag = tk - t[:k]
        gap = b[k] - b[:k]
        psi = 0.5 * (db[k] - gap / lag) * np.exp(-gap * gap / (2 * lag)) / np.sqrt(2 * np.pi * lag)
        # trapezoid: p_0 = 0 and psi(t_k, t_k) = 0, so only interior nodes count
        integ = h * np.dot(p[1:k], psi[1:k])
        corr = -_ZETA_MINUS_HALF * kappa[k] * h**1.5 if singular_correction else 0.0
        p[k] = sg * (-2 * src + 2 * integ) / (1 - 2 * sg * corr)
    return _clamp(p[1:], "Volterra solver")
