"""Experiment configuration and the named reproduction fixtures.

A config is a flat set of ``key = value`` lines (``#`` starts a comment) and
round-trips losslessly through :meth:`ExperimentConfig.to_text`.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

import numpy as np

from .brownian_fpt import MovingBoundary
from .errors import PreconditionError
from .fpt_transform import FptDensity, ProcessSpec, bounded_fpt_density, unbounded_fpt_density
from .heat_solutions import CATALOG_NAMES, HeatSolution, make_catalog_solution, param_names
from .montecarlo import SimConfig

BOUNDARY_PRESETS = ("linear",)


@dataclass(frozen=True)
class ExperimentConfig:
    process: str = "constant"
    c: float | None = None
    lam: float | None = None
    s: float | None = None
    y: float = 0.0
    barrier: float = 1.0
    slope: float = 0.0
    boundary: str = "linear"
    bounded: bool = False
    horizon: float | None = None
    points: int = 401
    paths: int = 5500
    dt: float = 1e-3
    seed: int = 0
    workers: int = 1
    bridge_correction: bool = True
    output: str | None = None

    def __post_init__(self):
        if self.process not in CATALOG_NAMES:
            raise PreconditionError(f"unknown process {self.process!r}; choose from {sorted(CATALOG_NAMES)}")
        if self.boundary not in BOUNDARY_PRESETS:
            raise PreconditionError(f"unknown boundary preset {self.boundary!r}")
        if self.points < 2:
            raise PreconditionError("need at least 2 grid points")
        if self.workers < 1:
            raise PreconditionError("workers must be >= 1")
        if self.horizon is not None and not self.horizon > 0:
            raise PreconditionError("horizon must be positive")
        if self.bounded and self.slope != 0:
            raise PreconditionError("the bounded case needs a constant barrier (slope 0)")
        # downstream invariants, re-checked on every load
        self.heat_solution()
        self.sim_config()

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {_format(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or key not in types:
                raise PreconditionError(f"config line {n}: cannot parse {raw.strip()!r}")
            values[key] = _parse(types[key], val, n)
        return cls(**values)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- builders ---------------------------------------------------------
    def heat_solution(self) -> HeatSolution:
        given = {"c": self.c, "lambda": self.lam, "s": self.s}
        params = []
        for name in param_names(self.process):
            v = given[name]
            if v is None and name == "c":
                v = 1.0
            if v is None:
                raise PreconditionError(f"process {self.process} needs --{name}")
            params.append(v)
        return make_catalog_solution(self.process, params)

    def process_spec(self) -> ProcessSpec:
        h = self.heat_solution()
        horizon = math.inf if self.horizon is None else self.horizon
        floor = 0.0 if self.bounded else None
        return ProcessSpec(self.process, self.y, (h,), horizon, floor)

    def moving_boundary(self) -> MovingBoundary:
        horizon = math.inf if self.horizon is None else self.horizon
        return MovingBoundary.affine(self.barrier, self.slope, horizon)

    def density(self) -> FptDensity:
        h = self.heat_solution()
        horizon = math.inf if self.horizon is None else self.horizon
        if self.bounded:
            return bounded_fpt_density(h, self.y, self.barrier, horizon)
        return unbounded_fpt_density(h, self.y, self.moving_boundary(), horizon)

    def sim_config(self) -> SimConfig:
        return SimConfig(n=self.paths, dt=self.dt, seed=self.seed, bridge_correction=self.bridge_correction)

    def time_grid(self, end: float) -> np.ndarray:
        return np.linspace(0.0, end, self.points)


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(typ: str, val: str, line: int):
    try:
        if "bool" in typ:
            low = val.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(val)
            return low in ("true", "1", "yes")
        if val.lower() == "none":
            return None
        if "int" in typ:
            return int(val)
        if "float" in typ:
            return float(val)
        return val
    except ValueError:
        raise PreconditionError(f"config line {line}: bad value {val!r} for a {typ}") from None


FIXTURES: dict[str, ExperimentConfig] = {
    # Brownian bridge pinned at 0 at s = 3, from y = 1, barrier 2 - t
    "example1": ExperimentConfig(process="brownian_bridge", s=3.0, y=1.0, barrier=2.0, slope=-1.0, horizon=3.0),
    # 3D Bessel bridge pinned at s = 4, from y = 3 down to a = 1
    "example3": ExperimentConfig(process="bessel_bridge", s=4.0, y=3.0, barrier=1.0, slope=0.0, horizon=4.0),
    # 3D Bessel process from y = 0.5 up to a = 1.5, state space (0, 1.5)
    "example8": ExperimentConfig(process="bessel3", y=0.5, barrier=1.5, bounded=True, horizon=8.0),
}
