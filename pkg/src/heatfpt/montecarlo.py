"""Euler-Maruyama simulation of hitting times, used as an independent check.

Random numbers are addressed by (seed, path index, step): paths are grouped
in runs of ``GROUP`` and steps in blocks of ``BLOCK``, and each (group, block)
cell draws from its own SFC64 stream keyed on (seed, group, block).  A path's
trajectory therefore does not depend on how paths are split between workers,
and only cells that still contain live paths are ever drawn.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .brownian_fpt import MovingBoundary
from .errors import NumericalError, PreconditionError
from .fpt_transform import FptDensity, ProcessSpec
from .heat_solutions import Kind

HIT, FLOOR, SURVIVED = 0, 1, 2
OUTCOMES = ("hit", "floor", "survived")
BLOCK = 256  # steps per RNG block
GROUP = 64  # paths sharing one RNG stream per block
MAX_REFINE = 20


@dataclass(frozen=True)
class SimConfig:
    n: int = 5500
    dt: float = 1e-3
    seed: int = 0
    bridge_correction: bool = True
    floor_eps: float = 1e-6
    pin_guard: float | None = None  # default: one dt before the pin

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError(f"number of paths must be a positive integer, got {self.n}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise PreconditionError("dt must be positive")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise PreconditionError("seed must be an integer in [0, 2^64)")
        if self.floor_eps < 0:
            raise PreconditionError("floor_eps must be nonnegative")

    @property
    def guard(self) -> float:
        return self.dt if self.pin_guard is None else self.pin_guard


@dataclass
class SimResult:
    """Per-path outcomes; ``times`` holds hit, floor or censoring times."""

    times: np.ndarray
    outcomes: np.ndarray
    final_x: np.ndarray
    horizon: float
    seed: int
    dt: float

    @property
    def n(self) -> int:
        return int(self.outcomes.size)

    @property
    def n_hit(self) -> int:
        return int(np.count_nonzero(self.outcomes == HIT))

    @property
    def n_absorbed_floor(self) -> int:
        return int(np.count_nonzero(self.outcomes == FLOOR))

    @property
    def n_survived_horizon(self) -> int:
        return int(np.count_nonzero(self.outcomes == SURVIVED))

    @property
    def hit_times(self) -> np.ndarray:
        return np.sort(self.times[self.outcomes == HIT])

    def summary(self) -> str:
        return f"n_hit={self.n_hit} n_absorbed={self.n_absorbed_floor} n_survived={self.n_survived_horizon}"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("path_index,outcome,time\n")
        for i, (o, t) in enumerate(zip(self.outcomes, self.times)):
            buf.write(f"{i},{OUTCOMES[o]},{t:.17g}\n")
        return buf.getvalue()


def _group_draws(seed: int, group: int, block: int):
    """Draws for one path group and step block.

    Returns float32 normals (GROUP, BLOCK) and raw 64-bit words
    (GROUP, BLOCK // 2); each word supplies two 32-bit uniforms.
    """
    rng = np.random.Generator(np.random.SFC64(np.random.SeedSequence([seed, 0, group, block])))
    z = rng.standard_normal((GROUP, BLOCK), dtype=np.float32)
    w = rng.bit_generator.random_raw(GROUP * BLOCK // 2).reshape(GROUP, BLOCK // 2)
    return z, w


def _block_draws(seed: int, block: int, lo: int, paths: np.ndarray):
    """Rows of (normals, uniform words) for the chunk-relative ``paths`` of one block."""
    z = np.empty((paths.size, BLOCK), dtype=np.float32)
    w = np.empty((paths.size, BLOCK // 2), dtype=np.uint64)
    glob = lo + paths
    groups = glob // GROUP
    for g in np.unique(groups):
        rows = np.flatnonzero(groups == g)
        gz, gw = _group_draws(seed, int(g), block)
        cols = glob[rows] - g * GROUP
        z[rows] = gz[cols]
        w[rows] = gw[cols]
    return z, w


# drift codes understood by the compiled kernel
_DRIFT_CODES = {
    Kind.CONSTANT: 0,
    Kind.EXPONENTIAL: 1,
    Kind.GAUSSIAN_KERNEL: 2,
    Kind.LINEAR_X: 3,
    Kind.BESSEL_BRIDGE_KERNEL: 4,
}
_ALIVE, _HIT, _ODD, _FLOORED = 0, 1, 2, 3


@njit(cache=True, error_model="numpy")
def _drift(codes, pars, t, x):
    mu = 0.0
    for c in range(codes.size):
        code = codes[c]
        if code == 1:
            mu += pars[c]
        elif code == 2:
            mu -= x / (pars[c] - t)
        elif code == 3:
            mu += 1.0 / x
        elif code == 4:
            mu += 1.0 / x - x / (pars[c] - t)
    return mu


@njit(cache=True)
def _uniform(w, i, j):
    """The j-th 32-bit uniform of row i, in (0, 1]."""
    word = w[i, j >> 1]
    if j & 1:
        word = word >> np.uint64(32)
    return (float(word & np.uint64(0xFFFFFFFF)) + 1.0) * 2.0**-32


@njit(cache=True, error_model="numpy")
def _advance(x, g, z, w, tv, sq, bv, j0, jn, sigma, codes, pars, floor_level, bridge, state, when, stop):
    """Euler steps j0..jn-1 of a block for every path; x, g are updated in place.

    A path stops early on a hit (state 1) or on a step needing refinement
    (state 2: drift increment above 1 or landing on the floor), in which
    case x, g still hold the values before step ``stop``.
    """
    for i in range(x.size):
        xi = x[i]
        gi = g[i]
        state[i] = 0
        for j in range(j0, jn):
            t0 = tv[j]
            h = tv[j + 1] - t0
            mu = _drift(codes, pars, t0, xi)
            if not (abs(mu) * h <= 1.0):
                state[i] = 2
                stop[i] = j
                break
            xn = xi + mu * h + sq[j] * z[i, j]
            if xn <= floor_level:
                state[i] = 2
                stop[i] = j
                break
            g1 = sigma * (bv[j + 1] - xn)
            if g1 <= 0.0:
                state[i] = 1
                when[i] = t0 + h * gi / (gi - g1)
                xi = xn
                break
            # Brownian-bridge probability of an unseen crossing inside the step;
            # below e^-23 it cannot beat the smallest uniform 2^-32
            expo = -2.0 * gi * g1 / h
            if bridge and expo > -23.0 and _uniform(w, i, j) < math.exp(expo):
                state[i] = 1
                when[i] = t0 + 0.5 * h
                xi = xn
                break
            xi = xn
            gi = g1
        x[i] = xi
        g[i] = gi


class _Refiner:
    """Re-runs one step on a finer grid, keeping its Brownian increment.

    Used when the drift increment exceeds 1 (near a singular drift) or the
    step lands on the absorbing floor.  Extra variates come from a stream
    keyed on (seed, path, step), so refinement is as reproducible as the
    main loop.
    """

    def __init__(self, proc, bnd, cfg, sigma):
        self.proc, self.bnd, self.cfg, self.sigma = proc, bnd, cfg, sigma
        self.floor = proc.absorbing_floor

    def run(self, path, step, t0, h, x0, dw):
        self.rng = np.random.Generator(np.random.SFC64(np.random.SeedSequence([self.cfg.seed, 1, path, step])))
        return self._step(t0, h, x0, dw, 0)

    def _split(self, t0, h, x0, dw, level):
        dw1 = 0.5 * dw + math.sqrt(h / 4) * self.rng.standard_normal()
        x1, ev, te = self._step(t0, h / 2, x0, dw1, level + 1)
        if ev is not None:
            return x1, ev, te
        return self._step(t0 + h / 2, h / 2, x1, dw - dw1, level + 1)

    def _step(self, t0, h, x0, dw, level):
        mu = float(self.proc.drift(t0, x0))
        if not (math.isfinite(mu) and abs(mu * h) <= 1.0):
            if level >= MAX_REFINE:
                raise NumericalError(
                    f"drift {mu:.3g} at (t={t0:.6g}, x={x0:.6g}) still too large after {MAX_REFINE} refinements"
                )
            return self._split(t0, h, x0, dw, level)
        x1 = x0 + mu * h + dw
        t1 = t0 + h
        g0 = self.sigma * (float(self.bnd(t0)) - x0)
        g1 = self.sigma * (float(self.bnd(t1)) - x1)
        if g1 <= 0:
            return x1, HIT, t0 + h * g0 / (g0 - g1)
        if self.cfg.bridge_correction and self.rng.random() < math.exp(-2 * g0 * g1 / h):
            return x1, HIT, t0 + h / 2
        if self.floor is not None and x1 <= self.floor + self.cfg.floor_eps:
            if level < MAX_REFINE:
                return self._split(t0, h, x0, dw, level)
            return x1, FLOOR, t1
        return x1, None, None


def _simulate_chunk(proc: ProcessSpec, bnd: MovingBoundary, cfg: SimConfig, lo: int, hi: int):
    m = hi - lo
    y = proc.y
    sigma = 1.0 if float(bnd(0.0)) > y else -1.0
    end = proc.horizon if proc.pin_time is None else proc.pin_time - cfg.guard
    n_steps = max(1, math.ceil(end / cfg.dt - 1e-9))
    floor = proc.absorbing_floor
    floor_level = -math.inf if floor is None else floor + cfg.floor_eps
    codes = np.array([_DRIFT_CODES[h.kind] for h in proc.components], dtype=np.int64)
    pars = np.array([h.params[0] if h.params else 0.0 for h in proc.components])
    refiner = _Refiner(proc, bnd, cfg, sigma)

    x = np.full(m, y)
    gap = np.full(m, sigma * (float(bnd(0.0)) - y))
    times = np.full(m, end)
    outcomes = np.full(m, SURVIVED, dtype=np.int8)
    alive = np.ones(m, dtype=bool)
    for blk in range(math.ceil(n_steps / BLOCK)):
        act = np.flatnonzero(alive)
        if act.size == 0:
            break
        k0 = blk * BLOCK
        jn = min(BLOCK, n_steps - k0)
        tv = np.minimum((k0 + np.arange(BLOCK + 1)) * cfg.dt, end)
        sq = np.sqrt(np.diff(tv))
        bv = np.asarray(bnd(tv), dtype=float)
        zb, ub = _block_draws(cfg.seed, blk, lo, act)
        xa = x[act]
        ga = gap[act]
        state = np.zeros(act.size, dtype=np.int8)
        when = np.zeros(act.size)
        stop = np.zeros(act.size, dtype=np.int64)
        _advance(xa, ga, zb, ub, tv, sq, bv, 0, jn, sigma, codes, pars, floor_level,
                 cfg.bridge_correction, state, when, stop)
        for i in np.flatnonzero(state == _ODD):
            sl = slice(i, i + 1)
            while state[i] == _ODD:
                j = int(stop[i])
                t0, h = float(tv[j]), float(tv[j + 1] - tv[j])
                dw = float(sq[j]) * float(zb[i, j])
                x1, ev, te = refiner.run(lo + int(act[i]), k0 + j, t0, h, float(xa[i]), dw)
                xa[i] = x1
                if ev is not None:
                    state[i] = _HIT if ev == HIT else _FLOORED
                    when[i] = te
                    break
                ga[i] = sigma * (float(bv[j + 1]) - x1)
                _advance(xa[sl], ga[sl], zb[sl], ub[sl], tv, sq, bv, j + 1, jn, sigma, codes, pars,
                         floor_level, cfg.bridge_correction, state[sl], when[sl], stop[sl])
        outcomes[act[state == _HIT]] = HIT
        outcomes[act[state == _FLOORED]] = FLOOR
        done = state != _ALIVE
        times[act[done]] = when[done]
        x[act] = xa
        gap[act] = ga
        alive[act] = ~done
    return times, outcomes, x


def simulate_paths(p: ProcessSpec, bnd: MovingBoundary, cfg: SimConfig, workers: int = 1) -> SimResult:
    """Simulate ``cfg.n`` paths of ``p`` until they hit ``bnd``, are absorbed, or time out.

    The horizon is ``p.horizon`` capped by the boundary's; pinned processes
    stop ``cfg.guard`` before the pin and count as censored.
    """
    if float(bnd(0.0)) == p.y:
        raise PreconditionError("boundary starts at the process (b(0) == y)")
    horizon = min(p.horizon, bnd.horizon)
    if not math.isfinite(horizon):
        raise PreconditionError("simulation needs a finite horizon")
    if cfg.dt >= horizon / 10:
        raise PreconditionError(f"dt={cfg.dt} too coarse for horizon {horizon}")
    if p.pin_time is not None and not (0 < cfg.guard < horizon):
        raise PreconditionError("pin_guard must lie in (0, horizon)")
    if p.horizon != horizon:
        p = ProcessSpec(p.name, p.y, p.components, horizon, p.absorbing_floor)
    if workers < 1:
        raise PreconditionError("workers must be >= 1")

    n_groups = -(-cfg.n // GROUP)
    cuts = np.linspace(0, n_groups, min(workers, n_groups) + 1).astype(int) * GROUP
    cuts[-1] = cfg.n
    spans = [(int(a), int(b)) for a, b in zip(cuts[:-1], cuts[1:])]
    if len(spans) == 1:
        parts = [_simulate_chunk(p, bnd, cfg, *spans[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            parts = list(pool.map(lambda s: _simulate_chunk(p, bnd, cfg, *s), spans))
    times, outcomes, final_x = (np.concatenate(cols) for cols in zip(*parts))
    return SimResult(times, outcomes, final_x, horizon, int(cfg.seed), float(cfg.dt))


def empirical_cdf(r: SimResult):
    """Sub-distribution step function t -> #(hit times <= t) / n."""
    hits = r.hit_times
    n = r.n

    def F(t):
        return (np.searchsorted(hits, np.asarray(t, dtype=float), side="right") / n)[()]

    return F


def ks_critical(n: int, level: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value (1.63 at 1 %, 1.36 at 5 %)."""
    coef = {0.01: 1.63, 0.05: 1.36}[level]
    return coef / math.sqrt(n)


def ks_distance(r: SimResult, theoretical: FptDensity) -> float:
    """max |F_n(t) - F(t)| over the hit-time jump points and the horizon.

    Both sides are sub-distributions: censored and absorbed paths are mass
    at +infinity.
    """
    if abs(r.horizon - theoretical.horizon) > 1e-6 * max(1.0, r.horizon):
        raise PreconditionError(
            f"supports differ: simulation horizon {r.horizon:g}, density horizon {theoretical.horizon:g}"
        )
    hits = np.minimum(r.hit_times, theoretical.horizon)
    n = r.n
    m = hits.size
    F_end = float(theoretical.cdf(theoretical.horizon))
    if m == 0:
        return F_end
    # ties share the value after the last of them
    F_hat = np.searchsorted(hits, hits, side="right") / n
    d = np.max(np.abs(F_hat - theoretical.cdf(hits)))
    return float(max(d, abs(m / n - F_end)))
