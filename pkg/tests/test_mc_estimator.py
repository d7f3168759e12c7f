import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkn.mc_estimator import SliceGrid, compute_Vl, feature_coefficients, mc_estimate, slice_mse, variance_check
from rkn.param_measure import sample
from rkn.rkhs_repr import CoefficientFunction, eval_target


def test_slice_grid_midpoints():
    g = SliceGrid(1001)
    assert g.s[500] == 0.5
    assert g.weights.sum() == pytest.approx(1.0)
    assert slice_mse(g, g.s, np.zeros(1001)) == pytest.approx(1 / 3, abs=1e-6)


def test_estimator_matches_direct_sum(relu_b7_gauss):
    ctx, _, target = relu_b7_gauss
    z = sample(ctx.measure, 5, 300)
    X = ctx.slice_points(np.linspace(0, 1, 7))
    direct = (ctx.features(2, z, X) * feature_coefficients(ctx, target.coeff, z)).mean(axis=1)
    np.testing.assert_allclose(mc_estimate(ctx, target.coeff, 2, z, X), direct, atol=1e-10)


def test_zero_coefficient_estimate(relu_b7):
    ctx = relu_b7[0]
    z = sample(ctx.measure, 0, 10)
    assert np.all(mc_estimate(ctx, CoefficientFunction({}), 2, z, ctx.slice_points([0.2, 0.4])) == 0)


def test_vl_closed_form(relu_b7):
    # level-2 atoms on the slice are relu(s + 7 + b); the B atom dominates with int (s + 14)^2 = 196 + 14 + 1/3
    ctx = relu_b7[0]
    assert compute_Vl(ctx, 2) == pytest.approx(14**2 + 14 + 1 / 3, abs=1e-6)
    assert compute_Vl(ctx, 1) == pytest.approx(7**2 + 7 + 1 / 3, abs=1e-6)


@pytest.mark.parametrize("N", [32, 128])
def test_variance_bound(relu_b7, N):
    ctx, _, target = relu_b7
    rep = variance_check(ctx, target, N, 200, seed=1)
    assert rep.passed, rep
    assert rep.coeff_norm_sq == pytest.approx(192.0)


def test_per_draw_variance_oracle(relu_b7):
    # Oracle for N * E||f_N - f||^2: per-draw integrated variance of c(z) psi(z) on the slice.
    ctx, _, target = relu_b7
    g = SliceGrid(1001)
    X = ctx.slice_points(g.s)
    f = eval_target(target, ctx, X)
    atoms = ctx.measure.atom_batch()
    c = target.coeff.on_atoms(ctx.measure)
    vals = ctx.features(2, atoms, X) * c
    second = float(g.weights @ (ctx.measure.atom_masses * vals**2).sum(axis=1))
    per_draw = second - float(g.weights @ f**2)
    # second moment of c(z) psi(z) is 16 on the slice; subtracting ||h||^2 = 1/3 leaves the variance
    assert per_draw == pytest.approx(16 - 1 / 3, rel=1e-5)
    rep = variance_check(ctx, target, 64, 400, seed=2)
    assert abs(rep.empirical_mse - per_draw / 64) <= 4 * rep.mse_stderr


@given(seed=st.integers(0, 2**31), N=st.integers(1, 500))
def test_estimate_is_average_of_atom_terms(relu_b7, seed, N):
    ctx, _, target = relu_b7
    z = sample(ctx.measure, seed, N)
    X = ctx.slice_points([0.25, 0.5])
    est = mc_estimate(ctx, target.coeff, 2, z, X)
    # at s = 1/2, G = 7.5 and only the beta0 atom is active, contributing 16 * relu(7.5 - 7) per draw
    hits = np.bincount(z.atom[z.atom >= 0], minlength=4)
    assert est[1] == pytest.approx(hits[1] * 16 * 0.5 / N, abs=1e-9)
