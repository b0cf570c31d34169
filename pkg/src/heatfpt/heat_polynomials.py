"""Heat polynomials v_n and their associated functions w_n.

v_n(x, t) is the coefficient of z^n / n! in exp(x z + z^2 t / 2), computed by
the three-term recurrence

    v_0 = 1,  v_1 = x,  v_n = x v_{n-1} + (n - 1) t v_{n-2}.

With this generating function v_n solves the forward equation
v_t = v_xx / 2, so v_n(x, -t) solves the backward one.  The associated
function is

    w_n(x, t) = g0(t, x) v_n(x, -t) (t / 2)^(-n),   g0 = (2 pi t)^(-1/2) exp(-x^2 / 2t).

``check_poly_identities`` verifies v_n' = n v_{n-1}, w_{n-1}' = -w_n / 2 and
the log-derivative chain w_n'/w_n = w_0'/w_0 + v_n'(x,-t)/v_n(x,-t), with the
x-derivatives taken from the explicit coefficient form (independent of the
recurrence identities being checked).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

MAX_DEGREE = 64


def _check_degree(n):
    if int(n) != n or n < 0:
        raise PreconditionError(f"degree must be a nonnegative integer, got {n}")
    if n > MAX_DEGREE:
        raise PreconditionError(f"degree capped at {MAX_DEGREE}, got {n}")
    return int(n)


def heat_poly_v(n: int, x, t):
    """v_n(x, t) via the three-term recurrence (broadcasts over x, t)."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    prev = np.ones(np.broadcast(x, t).shape)
    if n == 0:
        return prev[()]
    cur = np.broadcast_to(x, prev.shape).astype(float)
    for k in range(2, n + 1):
        prev, cur = cur, x * cur + (k - 1) * t * prev
    return cur[()]


def heat_poly_coeffs(n: int, t: float) -> np.ndarray:
    """Coefficients of v_n(., t) in increasing powers of x.

    Closed form: v_n = sum_k n! / (k! (n-2k)!) (t/2)^k x^(n-2k).
    """
    n = _check_degree(n)
    c = np.zeros(n + 1)
    for k in range(n // 2 + 1):
        c[n - 2 * k] = math.factorial(n) / (math.factorial(k) * math.factorial(n - 2 * k)) * (t / 2) ** k
    return c


def _g0(x, t):
    return np.exp(-x * x / (2 * t)) / np.sqrt(2 * np.pi * t)


def assoc_w(n: int, x, t):
    """w_n(x, t) = g0(t, x) v_n(x, -t) (t/2)^(-n); requires t > 0."""
    n = _check_degree(n)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise PreconditionError("associated function needs t > 0")
    x = np.asarray(x, dtype=float)
    return (_g0(x, t) * heat_poly_v(n, x, -t) * (t / 2) ** (-n))[()]


def _poly_dx(n, x, t):
    """d/dx v_n(x, t) from the coefficient form."""
    c = np.polynomial.polynomial.polyder(heat_poly_coeffs(n, t))
    return np.polynomial.polynomial.polyval(x, c) if n > 0 else 0.0


def _poly_val(n, x, t):
    return np.polynomial.polynomial.polyval(x, heat_poly_coeffs(n, t))


def _poly_scale(n, x, t):
    # sum of |terms|: the size against which cancellation is measured
    return np.polynomial.polynomial.polyval(abs(x), np.abs(heat_poly_coeffs(n, t)))


def assoc_w_dx(n: int, x: float, t: float) -> float:
    """d/dx w_n(x, t), differentiating g0 and the polynomial directly."""
    p = _poly_val(n, x, -t)
    dp = _poly_dx(n, x, -t)
    return float(_g0(x, t) * (dp - x / t * p) * (t / 2) ** (-n))


@dataclass
class IdentityReport:
    """Worst relative violations of the heat-polynomial identities."""

    n_max: int
    v_derivative: float = 0.0  # v_n' = n v_{n-1}
    w_derivative: float = 0.0  # w_{n-1}' = -w_n / 2
    log_chain: float = 0.0  # w_n'/w_n = w_0'/w_0 + v_n'(x,-t)/v_n(x,-t)
    ratio_chain: float = 0.0  # w_n'/w_n = w_0'/w_0 - (n/t) w_{n-1}/w_{n-1}'
    checked: int = 0
    skipped: list[tuple[str, int, float, float]] = field(default_factory=list)

    @property
    def worst(self) -> float:
        return max(self.v_derivative, self.w_derivative, self.log_chain, self.ratio_chain)

    def rows(self):
        return [
            ("v_derivative", self.v_derivative),
            ("w_derivative", self.w_derivative),
            ("log_chain", self.log_chain),
            ("ratio_chain", self.ratio_chain),
        ]


def _rel(a, b, floor=1.0):
    return abs(a - b) / max(abs(a), abs(b), floor)


def check_poly_identities(n_max: int, points, zero_tol: float = 1e-8) -> IdentityReport:
    """Check the derivative identities for 1 <= n <= n_max at (x, t) points.

    A point is skipped (and listed in ``report.skipped``) for a given n when
    the polynomial it divides by is within ``zero_tol`` of a root, measured
    relative to the sum of the absolute values of its terms.
    """
    n_max = _check_degree(n_max)
    if n_max < 1:
        raise PreconditionError("n_max must be at least 1")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if np.any(pts[:, 1] <= 0):
        raise PreconditionError("all points need t > 0")
    rep = IdentityReport(n_max=n_max)
    for x, t in pts:
        for n in range(1, n_max + 1):
            rep.checked += 1
            # v_n' = n v_{n-1}, at (x, t)
            lhs = _poly_dx(n, x, t)
            rhs = n * heat_poly_v(n - 1, x, t)
            scale = n * _poly_scale(n - 1, x, t)
            rep.v_derivative = max(rep.v_derivative, abs(lhs - rhs) / scale)

            # w_{n-1}' = -w_n / 2, relative to the size of g0 * scale
            lhs = assoc_w_dx(n - 1, x, t)
            rhs = -0.5 * float(assoc_w(n, x, t))
            wscale = float(_g0(x, t)) * _poly_scale(n, x, -t) * (t / 2) ** (-n) / 2
            rep.w_derivative = max(rep.w_derivative, abs(lhs - rhs) / wscale)

            vn = float(heat_poly_v(n, x, -t))
            if abs(vn) < zero_tol * _poly_scale(n, x, -t):
                rep.skipped.append(("v_n(x,-t)", n, x, t))
                continue
            wn = float(assoc_w(n, x, t))
            direct = assoc_w_dx(n, x, t) / wn
            w0_log = -x / t
            chain = w0_log + n * float(heat_poly_v(n - 1, x, -t)) / vn
            rep.log_chain = max(rep.log_chain, _rel(direct, chain))

            dw_prev = assoc_w_dx(n - 1, x, t)
            if abs(dw_prev) < zero_tol * wscale:
                rep.skipped.append(("w_{n-1}'", n, x, t))
                continue
            ratio = w0_log - n / t * float(assoc_w(n - 1, x, t)) / dw_prev
            rep.ratio_chain = max(rep.ratio_chain, _rel(direct, ratio))
    return rep
