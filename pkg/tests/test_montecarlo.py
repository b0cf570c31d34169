import math

import numpy as np
import pytest
from scipy.stats import norm

from heatfpt.brownian_fpt import MovingBoundary, upper_before_lower_density
from heatfpt.errors import NumericalError, PreconditionError
from heatfpt.fpt_transform import FptDensity, ProcessSpec, bounded_fpt_density, unbounded_fpt_density
from heatfpt.heat_solutions import make_catalog_solution as mk
from heatfpt.montecarlo import (
    FLOOR,
    HIT,
    SURVIVED,
    SimConfig,
    SimResult,
    empirical_cdf,
    ks_critical,
    ks_distance,
    simulate_paths,
)


def within(count, n, p, k=3.0):
    se = math.sqrt(p * (1 - p) / n)
    return abs(count / n - p) <= k * se


def fake_result(times, outcomes, horizon=1.0):
    times = np.asarray(times, dtype=float)
    return SimResult(times, np.asarray(outcomes, dtype=np.int8), np.zeros_like(times), horizon, 0, 1e-3)


def bm(y=0.0, horizon=1.0):
    return ProcessSpec.single(mk("constant", [1.0]), y, horizon=horizon)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"n": 0}, {"n": 2.5}, {"dt": 0.0}, {"dt": math.nan}, {"seed": -1},
                                    {"floor_eps": -1.0}])
    def test_rejects(self, kw):
        with pytest.raises(PreconditionError):
            SimConfig(**kw)

    def test_start_on_boundary(self):
        with pytest.raises(PreconditionError):
            simulate_paths(bm(1.0), MovingBoundary.affine(1.0, 0.0, 1.0), SimConfig(n=10))

    def test_needs_finite_horizon(self):
        p = ProcessSpec.single(mk("constant", [1.0]), 0.0)
        with pytest.raises(PreconditionError):
            simulate_paths(p, MovingBoundary.affine(1.0), SimConfig(n=10))

    def test_dt_too_coarse(self):
        with pytest.raises(PreconditionError):
            simulate_paths(bm(), MovingBoundary.affine(1.0, 0.0, 1.0), SimConfig(n=10, dt=0.2))

    def test_workers(self):
        with pytest.raises(PreconditionError):
            simulate_paths(bm(), MovingBoundary.affine(1.0, 0.0, 1.0), SimConfig(n=10), workers=0)


class TestEngine:
    def test_reflection_principle(self):
        r = simulate_paths(bm(), MovingBoundary.affine(1.0, 0.0, 1.0), SimConfig(n=5500, seed=3))
        assert within(r.n_hit, r.n, 2 * (1 - norm.cdf(1.0)))

    def test_deterministic_across_workers(self):
        p = ProcessSpec.single(mk("bessel_bridge", [4.0]), 3.0)
        b = MovingBoundary.affine(1.0, 0.0, 4.0)
        cfg = SimConfig(n=333, seed=11)
        a = simulate_paths(p, b, cfg)
        for w in (2, 3, 8):
            c = simulate_paths(p, b, cfg, workers=w)
            assert np.array_equal(a.times, c.times)
            assert np.array_equal(a.outcomes, c.outcomes)
            assert np.array_equal(a.final_x, c.final_x)
        assert a.to_csv() == simulate_paths(p, b, cfg).to_csv()

    def test_prefix_stability(self):
        # path i depends only on (seed, i), not on n
        b = MovingBoundary.affine(1.0, 0.5, 2.0)
        small = simulate_paths(bm(horizon=2.0), b, SimConfig(n=100, seed=4))
        big = simulate_paths(bm(horizon=2.0), b, SimConfig(n=300, seed=4))
        assert np.array_equal(small.times, big.times[:100])

    def test_seeds_differ(self):
        b = MovingBoundary.affine(1.0, 0.0, 1.0)
        r1 = simulate_paths(bm(), b, SimConfig(n=200, seed=1))
        r2 = simulate_paths(bm(), b, SimConfig(n=200, seed=2))
        assert not np.array_equal(r1.times, r2.times)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_conservation(self, seed):
        p = ProcessSpec("bessel", 0.5, (mk("bessel3"),), 8.0, 0.0)
        r = simulate_paths(p, MovingBoundary.affine(1.5, 0.0, 8.0), SimConfig(n=500, seed=seed))
        assert r.n_hit + r.n_absorbed_floor + r.n_survived_horizon == r.n == 500
        assert np.all(r.times[r.outcomes == HIT] <= 8.0)

    def test_hit_times_lie_on_grid_or_inside(self):
        r = simulate_paths(bm(), MovingBoundary.affine(1.0, 0.0, 1.0), SimConfig(n=500, seed=9))
        t = r.hit_times
        assert np.all((t > 0) & (t <= 1.0))

    def test_bridge_pin(self):
        # bridge from 1 pinned at 0 at s = 3 under a constant barrier 2
        s, dt = 3.0, 1e-3
        p = ProcessSpec.single(mk("brownian_bridge", [s]), 1.0)
        r = simulate_paths(p, MovingBoundary.affine(2.0, 0.0, s), SimConfig(n=5500, dt=dt, seed=5))
        surv = r.outcomes == SURVIVED
        assert np.all(np.abs(r.times[surv] - s) <= 2 * dt)
        assert np.max(np.abs(r.final_x[surv])) < 6 * math.sqrt(dt)
        assert within(r.n_survived_horizon, r.n, 1 - math.exp(-2 * 2.0 * (2.0 - 1.0) / s))

    def test_bessel_bridge_defect(self):
        h = mk("bessel_bridge", [4.0])
        d = bounded_fpt_density(h, 0.5, 1.5, 4.0)
        p = ProcessSpec("bb", 0.5, (h,), 4.0, 0.0)
        r = simulate_paths(p, MovingBoundary.affine(1.5, 0.0, 4.0), SimConfig(n=5500, seed=6))
        assert within(r.n - r.n_hit, r.n, d.defect)
        assert ks_distance(r, d) < ks_critical(r.n)

    def test_floor_absorption(self):
        # Brownian motion on (0, 1) from 0.5: gambler's ruin splits the mass evenly
        p = ProcessSpec("bm", 0.5, (mk("constant", [1.0]),), 5.0, 0.0)
        r = simulate_paths(p, MovingBoundary.affine(1.0, 0.0, 5.0), SimConfig(n=2000, seed=7))
        assert within(r.n_absorbed_floor, r.n, 0.5)
        assert r.n_survived_horizon == 0
        d = bounded_fpt_density(mk("constant", [1.0]), 0.5, 1.0, 5.0)
        assert ks_distance(r, d) < ks_critical(r.n)

    def test_floor_counts_separately(self):
        p = ProcessSpec("bessel", 0.05, (mk("bessel3"),), 1.0, 0.0)
        r = simulate_paths(p, MovingBoundary.affine(1.0, 0.0, 1.0), SimConfig(n=300, seed=1, floor_eps=0.04))
        assert r.n_absorbed_floor > 0
        assert np.all(r.times[r.outcomes == FLOOR] > 0)

    def test_drift_overflow_is_an_error(self):
        p = ProcessSpec.single(mk("bm_drift", [1e12]), 0.0, horizon=1.0)
        with pytest.raises(NumericalError):
            simulate_paths(p, MovingBoundary.affine(1.0, 0.0, 1.0), SimConfig(n=64, seed=0))

    def test_refinement_near_singularity(self):
        # the 1/x drift is steep near 0; refined steps keep the result finite
        p = ProcessSpec("bessel", 0.01, (mk("bessel3"),), 1.0, 0.0)
        r = simulate_paths(p, MovingBoundary.affine(1.0, 0.0, 1.0), SimConfig(n=256, seed=2, floor_eps=1e-9))
        assert np.all(np.isfinite(r.times))
        assert r.n == 256

    @pytest.mark.slow
    def test_dt_convergence(self):
        # checked without the crossing correction, whose bias is already below KS noise at dt = 1e-2
        h = mk("constant", [1.0])
        b = MovingBoundary.affine(1.0, 0.5, 2.0)
        p = ProcessSpec.single(h, 0.0, horizon=2.0)
        d = unbounded_fpt_density(h, 0.0, b, 2.0)
        medians = []
        for dt in (1e-2, 1e-3, 1e-4):
            ks = [ks_distance(simulate_paths(p, b, SimConfig(dt=dt, seed=s, bridge_correction=False)), d)
                  for s in range(20)]
            medians.append(np.median(ks))
        assert medians[0] > medians[1] > medians[2]


class TestEmpirical:
    def test_no_hits(self):
        F = empirical_cdf(fake_result([1.0, 1.0], [SURVIVED, SURVIVED]))
        assert np.all(F(np.linspace(0, 1, 11)) == 0)

    def test_steps(self):
        F = empirical_cdf(fake_result([0.3, 0.1, 0.2, 0.4], [HIT] * 4))
        assert np.allclose(F([0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 1.0]), [0, 0.25, 0.25, 0.5, 0.75, 1, 1])
        assert F(0.35) == 0.75

    def test_sub_distribution(self):
        F = empirical_cdf(fake_result([0.2, 0.5, 1.0], [HIT, FLOOR, SURVIVED]))
        assert F(10.0) == pytest.approx(1 / 3)

    def test_critical_values(self):
        assert ks_critical(5500) == pytest.approx(0.02198, abs=1e-5)
        assert ks_critical(5500, 0.05) == pytest.approx(1.36 / math.sqrt(5500))


class TestKs:
    def test_zero_when_matching_at_jumps(self):
        # uniform on [0, 1]: F(i/4) = i/4 equals the empirical CDF at each jump
        r = fake_result([0.25, 0.5, 0.75, 1.0], [HIT] * 4)
        d = FptDensity(lambda u: np.ones_like(u), 1.0)
        # the CDF table starts at u = 1e-10
        assert ks_distance(r, d) == pytest.approx(0.0, abs=1e-9)

    def test_defect_counted_at_horizon(self):
        r = fake_result([1.0, 1.0], [SURVIVED, SURVIVED])
        d = FptDensity(lambda u: 0.5 * np.ones_like(u), 1.0)
        assert ks_distance(r, d) == pytest.approx(0.5, abs=1e-9)

    def test_support_mismatch(self):
        r = fake_result([0.5], [HIT], horizon=2.0)
        with pytest.raises(PreconditionError):
            ks_distance(r, FptDensity(lambda u: np.ones_like(u), 1.0))

    def test_missing_h_ratio_is_detected(self):
        h = mk("bessel3")
        p = ProcessSpec("bessel", 0.5, (h,), 8.0, 0.0)
        r = simulate_paths(p, MovingBoundary.affine(1.5, 0.0, 8.0), SimConfig(n=5500, seed=0))
        wrong = FptDensity(lambda u: upper_before_lower_density(0.0, 0.5, u, 1.5), 8.0)
        right = bounded_fpt_density(h, 0.5, 1.5, 8.0)
        assert ks_distance(r, wrong) > 0.1
        assert ks_distance(r, right) < ks_critical(r.n)


class TestCsv:
    def test_format(self):
        r = fake_result([0.1, 0.30000000000000004, 2.0], [HIT, FLOOR, SURVIVED], horizon=2.0)
        lines = r.to_csv().splitlines()
        assert lines[0] == "path_index,outcome,time"
        assert lines[1] == "0,hit,0.10000000000000001"
        assert lines[2].startswith("1,floor,")
        assert float(lines[2].split(",")[2]) == 0.30000000000000004
        assert lines[3] == "2,survived,2"

    def test_summary(self):
        r = fake_result([0.1, 0.3, 2.0], [HIT, FLOOR, SURVIVED], horizon=2.0)
        assert r.summary() == "n_hit=1 n_absorbed=1 n_survived=1"
