import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkn.config import RunConfig
from rkn.rkhs_repr import CoefficientFunction, TargetFunction, TargetKind
from rkn.separation_lab import (
    ComplexityProbe,
    deep_mean_error,
    loglog_slope,
    minimal_n,
    probe_deep,
    probe_shallow,
    sweep,
    trial_seeds,
)

ZERO = TargetFunction(TargetKind.GENERAL_K, CoefficientFunction({}), 0.0)


@given(threshold_n=st.integers(1, 5000), cap=st.integers(1, 6000))
def test_minimal_n_on_monotone_predicate(threshold_n, cap):
    res = minimal_n(lambda n: 0.0 if n >= threshold_n else 1.0, 0.5, cap)
    if threshold_n <= cap:
        assert not res.censored and res.N == threshold_n
    else:
        assert res.censored and res.N == cap


def test_minimal_n_boundary_property():
    # non-monotone error: the search still returns a boundary where N passes and N - 1 fails
    err = lambda n: 0.0 if n in (5, 6) or n >= 40 else 1.0  # noqa: E731
    res = minimal_n(err, 0.5, 1000)
    assert err(res.N) <= 0.5 and err(res.N - 1) > 0.5


def test_zero_target_needs_one_sample(relu_b7):
    probe = ComplexityProbe(eps=0.05, trials=4)
    assert probe_deep(relu_b7[0], ZERO, probe).N == 1
    assert probe_shallow(relu_b7[0], ZERO, probe).N == 1


def test_deep_minimality_and_analytic_bound(relu_b7):
    ctx, _, target = relu_b7
    probe = ComplexityProbe(eps=0.2, trials=20, N_cap=2**14)
    res = probe_deep(ctx, target, probe, B=7.0)
    err = deep_mean_error(ctx, target, probe, B=7.0)
    assert err(res.N) <= 0.04 < err(res.N - 1)
    assert res.N <= res.analytic_N


def test_deep_large_eps(relu_b7):
    # estimator error is about 15.7 / N, so eps = 10 is met by a single draw
    res = probe_deep(relu_b7[0], relu_b7[2], ComplexityProbe(eps=10.0, trials=10))
    assert res.N == 1


def test_analytic_bound_scales_with_eps(relu_b7):
    ctx, _, target = relu_b7
    a = probe_deep(ctx, target, ComplexityProbe(eps=0.4, trials=4, N_cap=64), V2=210.0)
    b = probe_deep(ctx, target, ComplexityProbe(eps=0.8, trials=4, N_cap=64), V2=210.0)
    assert a.analytic_N == pytest.approx(4 * b.analytic_N, rel=1e-3)


def test_censoring(relu_b7):
    res = probe_shallow(relu_b7[0], relu_b7[2], ComplexityProbe(eps=0.05, trials=3, N_cap=16), B=7.0)
    assert res.censored and res.N == 16


def test_trial_seeds_depend_on_side_and_b():
    p = ComplexityProbe(eps=0.1, trials=3)
    assert trial_seeds(p, "deep", 7.0) == trial_seeds(p, "deep", 7.0)
    assert trial_seeds(p, "deep", 7.0) != trial_seeds(p, "shallow", 7.0)
    assert trial_seeds(p, "deep", 7.0) != trial_seeds(p, "deep", 15.0)


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0])
    assert loglog_slope(x, 3 * x**2) == pytest.approx(2.0)


def test_small_sweep_rows():
    cfg = RunConfig(B_list=[15.0, 7.0, 31.0], trials=3, N_cap=64)
    rep = sweep(cfg)
    assert [r.B for r in rep.rows] == [7.0, 15.0, 31.0]
    for r in rep.rows:
        assert r.m_star == pytest.approx((1 + r.B) / 8, abs=1e-6)
        assert r.ratio == r.N_shallow / r.N_deep
    assert rep.fitted_exponent is None  # everything is censored at this cap
    assert rep.to_dict()["config"]["B_list"] == [15.0, 7.0, 31.0]
