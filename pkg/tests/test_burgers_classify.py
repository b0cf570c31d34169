import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatfpt.burgers_classify import (
    DriftSpec,
    bessel_drift,
    burgers_residual,
    classify_bessel_order,
    verify_decomposition,
    wn_drift_recursion_check,
)
from heatfpt.errors import DomainError, PreconditionError
from heatfpt.heat_solutions import make_catalog_solution as mk

CATALOG = [("constant", [2.0]), ("bm_drift", [0.5]), ("brownian_bridge", [3.0]), ("bessel3", []),
           ("bessel_bridge", [2.0])]


@pytest.mark.parametrize("name,params", CATALOG)
def test_catalog_drifts_solve_burgers(name, params):
    assert burgers_residual(DriftSpec.from_solutions([mk(name, params)])) <= 1e-6


def test_inverse_x():
    d = DriftSpec(lambda t, x: 1 / x, lambda t, x: -1 / x**2, ((0.0, 1.0), (0.5, 3.0)), "1/x")
    assert burgers_residual(d) <= 1e-6


def test_bridge_drift():
    d = DriftSpec(lambda t, x: -x / (2 - t), lambda t, x: -1 / (2 - t) + 0 * x, ((0.0, 1.0), (-3.0, 3.0)), "bridge")
    assert burgers_residual(d) <= 1e-6


def test_identity_drift_is_not_burgers():
    d = DriftSpec(lambda t, x: x + 0 * t, lambda t, x: 1 + 0 * x, ((0.0, 1.0), (-3.0, 3.0)), "x")
    assert burgers_residual(d, [(0.0, 1.0)], normalize=False) == pytest.approx(1.0, abs=1e-9)
    # normalised by 1 + mu^2 = 2
    assert burgers_residual(d, [(0.0, 1.0)]) == pytest.approx(0.5, abs=1e-9)


def test_sum_of_burgers_drifts_fails():
    k = mk("bessel3")
    d = DriftSpec.from_solutions([k, k])
    raw = burgers_residual(d, normalize=False)
    assert raw > 0.03
    assert burgers_residual(d) > 0.03


def test_out_of_domain_probe():
    d = bessel_drift(3)
    with pytest.raises(DomainError):
        burgers_residual(d, [(0.5, 0.1)])
    with pytest.raises(PreconditionError):
        burgers_residual(d, [])


def test_drift_spec_validation():
    with pytest.raises(PreconditionError):
        DriftSpec(lambda t, x: 1 / x, lambda t, x: -1 / x**2, ((0.0, 1.0), (2.0, 1.0)))
    with pytest.raises(PreconditionError):
        DriftSpec(lambda t, x: 1 / (x - 1.5 + 0 * t) * 0 + np.where(x > 2, np.nan, 0.0),
                  lambda t, x: 0 * x, ((0.0, 1.0), (0.5, 3.0)))


@pytest.mark.parametrize("m,n", [(3, 1), (5, 2), (1, 0)])
def test_classify_examples(m, n):
    c = classify_bessel_order(m)
    assert c.class_index == n
    assert len(c.components) == n
    assert c.degenerate == (n == 0)


@pytest.mark.parametrize("n", range(21))
def test_classify_odd_orders(n):
    assert classify_bessel_order(2 * n + 1).class_index == n


@pytest.mark.parametrize("m", [2, 4, 0, -3])
def test_classify_rejects(m):
    with pytest.raises(PreconditionError):
        classify_bessel_order(m)


def test_bessel_decomposition_matches_drift():
    # drift of order 2n+1 is n/x = n copies of 1/x
    c = classify_bessel_order(7)
    d = bessel_drift(7)
    g = d.probe_grid()
    total = sum(k.drift(g[:, 0], g[:, 1]) for k in c.components)
    assert np.allclose(total, d.mu(g[:, 0], g[:, 1]), rtol=1e-15)


def test_bessel3_drift_is_burgers():
    assert burgers_residual(bessel_drift(3)) <= 1e-6
    assert burgers_residual(bessel_drift(5)) > 0.03


def test_decomposition_examples():
    bb = mk("bessel_bridge", [2.0])
    assert verify_decomposition(bb, [mk("bessel3"), mk("brownian_bridge", [2.0])]) <= 1e-10
    assert verify_decomposition(mk("bessel3"), [mk("bessel3")]) == 0.0


def test_decomposition_missing_term():
    bb = mk("bessel_bridge", [2.0])
    g = DriftSpec.from_solutions([bb]).probe_grid()
    expect = np.max(np.abs(g[:, 1] / (2.0 - g[:, 0])))
    assert verify_decomposition(bb, [mk("bessel3")], g) == pytest.approx(expect, rel=1e-12)


def test_decomposition_domain_error():
    with pytest.raises(DomainError):
        verify_decomposition(mk("bessel3"), [mk("bessel3")], [(0.1, -1.0)])
    with pytest.raises(PreconditionError):
        verify_decomposition(mk("bessel3"), [])


def test_wn_recursion():
    pts = np.random.default_rng(5).uniform(0.1, 3.0, size=(50, 2))
    rep = wn_drift_recursion_check(10, pts)
    assert rep.log_chain <= 1e-7 and rep.ratio_chain <= 1e-7
    with pytest.raises(PreconditionError):
        wn_drift_recursion_check(0, pts)


@settings(max_examples=40, deadline=None)
@given(s=st.floats(1.0, 5.0), lam=st.floats(-2, 2))
def test_residual_property(s, lam):
    for h in (mk("brownian_bridge", [s]), mk("bessel_bridge", [s]), mk("bm_drift", [lam])):
        assert burgers_residual(DriftSpec.from_solutions([h])) <= 1e-6
