import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkn.mc_estimator import SliceGrid
from rkn.param_measure import ParamBatch, moments, unit_vector
from rkn.rkhs_repr import CoefficientFunction, TargetFunction, TargetKind
from rkn.shallow_probe import (
    aligned_l2_gap,
    fit_shallow,
    shallow_norm_lower_bound_general,
    shallow_norm_lower_bound_relu,
    shallow_values,
    slope_audit,
)

ZERO_TARGET = TargetFunction(TargetKind.GENERAL_K, CoefficientFunction({}), 0.0, alpha=0.0)


def test_relu_norm_bound_examples():
    assert shallow_norm_lower_bound_relu(1.0, 1.0, 1.0, 0.0) == pytest.approx(2.0)
    assert shallow_norm_lower_bound_relu(1.0, 1.0, 1.0, 1.0) == 0.0
    assert shallow_norm_lower_bound_relu(1.0, 1.0, 1.0, 0.05, split=True) == pytest.approx(2 - math.sqrt(24) * 0.05)


def test_general_norm_bound_examples():
    assert shallow_norm_lower_bound_general(1.0, 0.1, 1.0, 0.5, 1.0, 0.0) == pytest.approx(0.2)
    assert shallow_norm_lower_bound_general(1.0, 0.001, 0.5, 0.5, 1.0, 1.0) == 0.0
    val = shallow_norm_lower_bound_general(1.0, 0.0018204, 0.5, 0.5, 1.0, 1e-5)
    assert val == pytest.approx((0.0009102 - math.sqrt(12) * 1e-5) / 0.5, rel=1e-9)


@given(eps=st.floats(0, 1), m=st.floats(0.01, 100))
def test_norm_bound_monotone_in_eps(eps, m):
    assert shallow_norm_lower_bound_relu(m, 1.0, 1.0, eps) <= shallow_norm_lower_bound_relu(m, 1.0, 1.0, 0.0)


def test_aligned_gap_examples():
    g = SliceGrid(1001)
    assert aligned_l2_gap(g.s, g) == pytest.approx(1 / 12, abs=1e-6)
    assert aligned_l2_gap(np.full(1001, 3.0), g) == pytest.approx(0.0, abs=1e-24)


@given(a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_aligned_gap_affine_equality(a, b):
    g = SliceGrid(1001)
    assert aligned_l2_gap(a + b * g.s, g) == pytest.approx(b * b / 12, abs=1e-6 * max(1, b * b))


@given(values=st.lists(st.floats(-5, 5), min_size=2, max_size=20))
def test_aligned_gap_is_min_over_shifts(values):
    g = SliceGrid(1001)
    r = np.interp(g.s, np.linspace(0, 1, len(values)), values)
    gap = aligned_l2_gap(r, g)
    for c in (0.0, float(np.mean(values)), float(r[0])):
        assert gap <= float(g.weights @ (r - c) ** 2) + 1e-12


def test_zero_target_fits_with_zero_coefficients(relu_b7):
    fit = fit_shallow(relu_b7[0], ZERO_TARGET, 5, seed=0)
    assert fit.slice_error_sq == 0.0 and fit.norm_proxy == 0.0


def test_single_feature_slope(relu_b7):
    ctx = relu_b7[0]
    feats = ParamBatch(unit_vector(5)[None], np.array([7.0]), np.zeros(1), np.array([0]))
    from rkn.shallow_probe import ShallowFit
    fit = ShallowFit(feats, np.array([1.0]), 0.0, 0.0, 1.0)
    np.testing.assert_allclose(shallow_values(ctx, fit, [0.0, 1.0]), [7.0, 8.0])
    audit = slope_audit(fit, ctx)
    assert audit.max_slope == pytest.approx(1.0)
    assert audit.max_slope <= audit.empirical_bound + 1e-12


def test_fit_is_deterministic(relu_b7_gauss):
    ctx, _, target = relu_b7_gauss
    a = fit_shallow(ctx, target, 40, seed=3)
    b = fit_shallow(ctx, target, 40, seed=3)
    np.testing.assert_array_equal(a.alphas, b.alphas)


def test_unregularized_rank_deficient_retries(relu_b7):
    ctx, _, target = relu_b7
    fit = fit_shallow(ctx, target, 20, ridge_lambda=0.0, seed=0)
    assert fit.retried and fit.ridge_lambda == 1e-10


def test_degenerate_measure_plateau(relu_b7):
    # every first-layer feature on the slice is 0 or s + 7, so no fit beats the best affine approximation
    ctx, _, target = relu_b7
    fit = fit_shallow(ctx, target, 4096, seed=0)
    assert fit.slice_error_sq > 0.08


def test_gaussian_fit_converges(relu_b7_gauss):
    ctx, _, target = relu_b7_gauss
    fit = fit_shallow(ctx, target, 4096, seed=0)
    assert fit.slice_error_sq < 2.5e-3


@given(seed=st.integers(0, 2**31), N=st.integers(1, 200))
def test_slope_audit_empirical_bound(relu_b7_gauss, seed, N):
    ctx, _, target = relu_b7_gauss
    fit = fit_shallow(ctx, target, N, seed=seed)
    audit = slope_audit(fit, ctx)
    assert audit.max_slope <= audit.empirical_bound * (1 + 1e-9) + 1e-12
    assert audit.bound == pytest.approx(moments(ctx.measure).sigma_v * fit.norm_proxy * 1.05)
