"""Positive solutions of the backward heat equation -h_t = h_xx / 2.

Each solution h generates a diffusion dX = (h_x / h)(t, X) dt + dB whose drift
solves Burgers' equation (Cole-Hopf).  The catalog below covers Brownian
motion, Brownian motion with drift, the Brownian bridge, the 3D Bessel process
and the 3D Bessel bridge.

All evaluators broadcast over numpy arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, PreconditionError

FD_STEP = 1e-5
_LOG_2PI = math.log(2.0 * math.pi)


class Kind(str, enum.Enum):
    CONSTANT = "constant"
    EXPONENTIAL = "exponential"
    GAUSSIAN_KERNEL = "gaussian_kernel"
    LINEAR_X = "linear_x"
    BESSEL_BRIDGE_KERNEL = "bessel_bridge_kernel"


# external (CLI/config) names -> kind
CATALOG_NAMES: dict[str, Kind] = {
    "constant": Kind.CONSTANT,
    "bm_drift": Kind.EXPONENTIAL,
    "brownian_bridge": Kind.GAUSSIAN_KERNEL,
    "bessel3": Kind.LINEAR_X,
    "bessel_bridge": Kind.BESSEL_BRIDGE_KERNEL,
}

_PARAM_NAMES: dict[Kind, tuple[str, ...]] = {
    Kind.CONSTANT: ("c",),
    Kind.EXPONENTIAL: ("lambda",),
    Kind.GAUSSIAN_KERNEL: ("s",),
    Kind.LINEAR_X: (),
    Kind.BESSEL_BRIDGE_KERNEL: ("s",),
}

_HALF_LINE = {Kind.LINEAR_X, Kind.BESSEL_BRIDGE_KERNEL}
_PINNED = {Kind.GAUSSIAN_KERNEL, Kind.BESSEL_BRIDGE_KERNEL}


@dataclass(frozen=True)
class HeatSolution:
    """Evaluator for one catalog solution h(t, x).

    ``params`` holds the kind's parameters in the order of ``param_names``:
    ``c`` for constant, ``lambda`` for exponential and the pin time ``s``
    for the two kernels.
    """

    kind: Kind
    params: tuple[float, ...] = ()

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        names = _PARAM_NAMES[kind]
        params = tuple(float(p) for p in self.params)
        if len(params) != len(names):
            raise PreconditionError(
                f"{kind.value} takes {len(names)} parameter(s) {names}, got {len(params)}"
            )
        if any(not math.isfinite(p) for p in params):
            raise PreconditionError(f"non-finite parameter for {kind.value}: {params}")
        if kind is Kind.CONSTANT and params[0] <= 0:
            raise PreconditionError(f"constant solution needs c > 0, got {params[0]}")
        if kind in _PINNED and params[0] <= 0:
            raise PreconditionError(f"pin time s must be positive, got {params[0]}")
        object.__setattr__(self, "params", params)

    # -- metadata ---------------------------------------------------------
    @property
    def param_names(self) -> tuple[str, ...]:
        return _PARAM_NAMES[self.kind]

    @property
    def pin_time(self) -> float | None:
        return self.params[0] if self.kind in _PINNED else None

    @property
    def half_line(self) -> bool:
        return self.kind in _HALF_LINE

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, math.inf) if self.half_line else (-math.inf, math.inf)

    def in_domain(self, t, x) -> np.ndarray:
        """Boolean mask of points in the open domain (x > 0 on the half-line, t < s)."""
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        ok = np.isfinite(t) & np.isfinite(x) & (t >= 0)
        if self.half_line:
            ok &= x > 0
        if self.pin_time is not None:
            ok &= t < self.pin_time
        return ok

    def _prepare(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        s = self.pin_time
        if s is not None and np.any(t >= s):
            raise DomainError(f"{self.kind.value} is only defined for t < s = {s}")
        if self.half_line and np.any(x < 0):
            raise DomainError(f"{self.kind.value} lives on x >= 0")
        return t, x

    # -- evaluation -------------------------------------------------------
    def value(self, t, x):
        t, x = self._prepare(t, x)
        k = self.kind
        if k is Kind.CONSTANT:
            return np.full(np.broadcast(t, x).shape, self.params[0])[()]
        if k is Kind.EXPONENTIAL:
            lam = self.params[0]
            return np.exp(lam * x - 0.5 * lam * lam * t)
        if k is Kind.LINEAR_X:
            return np.broadcast_arrays(x, t)[0].copy()[()]
        tau = self.params[0] - t
        g = np.exp(-x * x / (2 * tau)) / np.sqrt(2 * np.pi * tau)
        if k is Kind.GAUSSIAN_KERNEL:
            return g
        return x / tau * g

    def log_value(self, t, x):
        """log h, finite where h > 0; used for overflow-free h-ratios."""
        t, x = self._prepare(t, x)
        k = self.kind
        with np.errstate(divide="ignore"):
            if k is Kind.CONSTANT:
                return np.full(np.broadcast(t, x).shape, math.log(self.params[0]))[()]
            if k is Kind.EXPONENTIAL:
                lam = self.params[0]
                return lam * x - 0.5 * lam * lam * t
            if k is Kind.LINEAR_X:
                return np.log(np.broadcast_arrays(x, t)[0])[()]
            tau = self.params[0] - t
            lg = -x * x / (2 * tau) - 0.5 * (_LOG_2PI + np.log(tau))
            if k is Kind.GAUSSIAN_KERNEL:
                return lg
            return np.log(x) - np.log(tau) + lg

    def dx(self, t, x):
        t, x = self._prepare(t, x)
        k = self.kind
        if k is Kind.CONSTANT:
            return np.zeros(np.broadcast(t, x).shape)[()]
        if k is Kind.EXPONENTIAL:
            lam = self.params[0]
            return lam * np.exp(lam * x - 0.5 * lam * lam * t)
        if k is Kind.LINEAR_X:
            return np.ones(np.broadcast(t, x).shape)[()]
        tau = self.params[0] - t
        g = np.exp(-x * x / (2 * tau)) / np.sqrt(2 * np.pi * tau)
        if k is Kind.GAUSSIAN_KERNEL:
            return -x / tau * g
        return g * (1 / tau - x * x / tau**2)

    def dxx(self, t, x):
        t, x = self._prepare(t, x)
        k = self.kind
        if k in (Kind.CONSTANT, Kind.LINEAR_X):
            return np.zeros(np.broadcast(t, x).shape)[()]
        if k is Kind.EXPONENTIAL:
            lam = self.params[0]
            return lam * lam * np.exp(lam * x - 0.5 * lam * lam * t)
        tau = self.params[0] - t
        g = np.exp(-x * x / (2 * tau)) / np.sqrt(2 * np.pi * tau)
        if k is Kind.GAUSSIAN_KERNEL:
            return g * (x * x / tau**2 - 1 / tau)
        return g * (x**3 / tau**3 - 3 * x / tau**2)

    def dt(self, t, x):
        t, x = self._prepare(t, x)
        k = self.kind
        if k in (Kind.CONSTANT, Kind.LINEAR_X):
            return np.zeros(np.broadcast(t, x).shape)[()]
        if k is Kind.EXPONENTIAL:
            lam = self.params[0]
            return -0.5 * lam * lam * np.exp(lam * x - 0.5 * lam * lam * t)
        tau = self.params[0] - t
        g = np.exp(-x * x / (2 * tau)) / np.sqrt(2 * np.pi * tau)
        # d/dt = -d/dtau
        if k is Kind.GAUSSIAN_KERNEL:
            return -0.5 * g * (x * x / tau**2 - 1 / tau)
        return g * (x / tau**2 - 0.5 * x / tau * (x * x / tau**2 - 1 / tau))

    def drift(self, t, x):
        """h_x / h in closed form (no 0/0 underflow far in the tails)."""
        t, x = self._prepare(t, x)
        k = self.kind
        shape = np.broadcast(t, x).shape
        if k is Kind.CONSTANT:
            return np.zeros(shape)[()]
        if k is Kind.EXPONENTIAL:
            return np.full(shape, self.params[0])[()]
        if k in _HALF_LINE and np.any(x == 0):
            raise DomainError(f"{self.kind.value} vanishes at x = 0; drift undefined")
        if k is Kind.LINEAR_X:
            return (1.0 / np.broadcast_arrays(x, t)[0])[()]
        tau = self.params[0] - t
        if k is Kind.GAUSSIAN_KERNEL:
            return -x / tau
        return 1.0 / x - x / tau

    def drift_dx(self, t, x):
        """Analytic x-derivative of the drift."""
        t, x = self._prepare(t, x)
        k = self.kind
        shape = np.broadcast(t, x).shape
        if k in (Kind.CONSTANT, Kind.EXPONENTIAL):
            return np.zeros(shape)[()]
        if k in _HALF_LINE and np.any(x == 0):
            raise DomainError(f"{self.kind.value} vanishes at x = 0; drift undefined")
        if k is Kind.LINEAR_X:
            return (-1.0 / np.broadcast_arrays(x, t)[0] ** 2)[()]
        tau = self.params[0] - t
        if k is Kind.GAUSSIAN_KERNEL:
            return np.broadcast_to(-1.0 / tau, shape)[()]
        return -1.0 / x**2 - 1.0 / tau

    def describe(self) -> str:
        args = ", ".join(f"{n}={v:g}" for n, v in zip(self.param_names, self.params))
        return f"{self.kind.value}({args})"


def make_catalog_solution(kind: str | Kind, params: Sequence[float] = ()) -> HeatSolution:
    """Build a catalog solution.

    ``kind`` may be a :class:`Kind` value (``"gaussian_kernel"``) or one of the
    external catalog names (``"brownian_bridge"``).

    >>> make_catalog_solution("linear_x").value(0.7, 2.0)
    2.0
    """
    if isinstance(kind, str) and kind in CATALOG_NAMES:
        kind = CATALOG_NAMES[kind]
    try:
        kind = Kind(kind)
    except ValueError:
        raise PreconditionError(f"unknown heat solution kind {kind!r}") from None
    return HeatSolution(kind, tuple(params))


def param_names(kind: str | Kind) -> tuple[str, ...]:
    """Parameter names a kind (or catalog name) expects, in order."""
    if isinstance(kind, str) and kind in CATALOG_NAMES:
        kind = CATALOG_NAMES[kind]
    return _PARAM_NAMES[Kind(kind)]


def standard_grid(h: HeatSolution, n: int = 20) -> np.ndarray:
    """n x n interior (t, x) probe grid, shape (n*n, 2).

    Half-line kinds are probed on x in [0.5, 3] (clear of the singular drift at
    0); pinned kinds on t in [0, 0.75 s].
    """
    s = h.pin_time
    t_hi = 0.75 * s if s is not None else 1.0
    ts = np.linspace(0.0, t_hi, n)
    xs = np.linspace(0.5, 3.0, n) if h.half_line else np.linspace(-3.0, 3.0, n)
    tt, xx = np.meshgrid(ts, xs, indexing="ij")
    return np.column_stack([tt.ravel(), xx.ravel()])


def _as_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.size == 0:
        raise PreconditionError("empty grid")
    g = g.reshape(-1, 2)
    return g


def heat_residual(h: HeatSolution, grid) -> float:
    """max |h_t + h_xx / 2| / (1 + |h|) over the grid; h_xx by central difference of h_x."""
    g = _as_grid(grid)
    t, x = g[:, 0], g[:, 1]
    if not np.all(h.in_domain(t, x)):
        raise DomainError("grid point outside the domain of " + h.describe())
    hxx = (h.dx(t, x + FD_STEP) - h.dx(t, x - FD_STEP)) / (2 * FD_STEP)
    res = np.abs(h.dt(t, x) + 0.5 * hxx) / (1.0 + np.abs(h.value(t, x)))
    return float(res.max())


def log_derivative_drift(h: HeatSolution) -> Callable:
    """The drift mu(t, x) = h_x / h as a function of (t, x)."""
    return h.drift
