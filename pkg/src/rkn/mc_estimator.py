"""Outer-layer Monte Carlo estimation of RKHS functions on the slice x = s v."""

from dataclasses import dataclass
import math

import numpy as np

from rkn.layered_kernel import LayeredKernelCtx
from rkn.param_measure import ParamBatch, UniformComponent, sample_atoms
from rkn.rkhs_repr import CoefficientFunction, TargetFunction, eval_target, norm_l2
from rkn.seeding import derive_rng, derive_seed

CONTINUOUS_SUP_DRAWS = 10_000
N_PROBES = 11


@dataclass(frozen=True)
class SliceGrid:
    """Midpoint rule for the uniform measure on [0, 1]."""

    n_points: int = 1001

    @property
    def s(self) -> np.ndarray:
        return (np.arange(self.n_points) + 0.5) / self.n_points

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n_points, 1.0 / self.n_points)


@dataclass(frozen=True)
class EstimatorReport:
    N: int
    empirical_mse: float
    mse_stderr: float
    variance_bound: float
    V_l: float
    coeff_norm_sq: float
    trials: int
    max_abs_z: float  # worst per-probe-point bias z-score

    @property
    def slack(self) -> float:
        return 1.0 + 4.0 / math.sqrt(self.trials)

    @property
    def bound_ok(self) -> bool:
        return self.empirical_mse <= self.variance_bound * self.slack

    @property
    def unbiased_ok(self) -> bool:
        return self.max_abs_z <= 4.0

    @property
    def passed(self) -> bool:
        return self.bound_ok and self.unbiased_ok


def slice_mse(grid: SliceGrid, f_values, g_values) -> float:
    diff = np.asarray(f_values, dtype=float) - np.asarray(g_values, dtype=float)
    return float(np.dot(grid.weights, diff**2))


def feature_coefficients(ctx: LayeredKernelCtx, c: CoefficientFunction, features: ParamBatch) -> np.ndarray:
    """c(z_j) for each feature: the atom value for atom draws, 0 on the continuous part."""
    per_atom = c.on_atoms(ctx.measure)
    coef = np.zeros(len(features))
    hit = features.atom >= 0
    coef[hit] = per_atom[features.atom[hit]]
    return coef


def _atom_terms(ctx, c, level, X):
    """Columns c_k psi^(level)_{z_k}(X) for atoms with nonzero coefficient."""
    per_atom = c.on_atoms(ctx.measure)
    used = np.flatnonzero(per_atom)
    if used.size == 0:
        return used, np.zeros((len(np.atleast_2d(X)), 0))
    atoms = ctx.measure.atom_batch().take(used)
    return used, ctx.features(level, atoms, X) * per_atom[used]


def mc_estimate(ctx: LayeredKernelCtx, c: CoefficientFunction, level: int, features: ParamBatch, X) -> np.ndarray:
    """(1/N) sum_j c(z_j) psi^(level)_{z_j}(x) at each row of X.

    Draws of the same atom share one feature evaluation; draws with zero
    coefficient are skipped since they contribute nothing.
    """
    N = len(features)
    X = np.atleast_2d(X)
    used, terms = _atom_terms(ctx, c, level, X)
    if used.size == 0:
        return np.zeros(len(X))
    counts = np.bincount(features.atom[features.atom >= 0], minlength=len(ctx.measure.atoms))
    return terms @ counts[used] / N


def compute_Vl(ctx: LayeredKernelCtx, level: int, grid: SliceGrid | None = None, seed: int = 0) -> float:
    """sup_z int_0^1 psi^(level)_z(s v)^2 ds over atoms and sampled continuous z.

    For bounded kernels the result is capped at ||K||_inf^2.
    """
    grid = grid or SliceGrid()
    X = ctx.slice_points(grid.s)
    atoms = ctx.measure.atom_batch()
    sup = float(np.max(grid.weights @ ctx.features(level, atoms, X) ** 2)) if len(atoms) else 0.0
    d = ctx.measure.dim
    if ctx.measure.uni is UniformComponent.DEGENERATE_ZERO:
        cont = ParamBatch(np.zeros((1, d)), np.zeros(1), np.full(1, ctx.measure.t_uni), np.full(1, -1))
    else:
        g = derive_rng(seed, "vl-continuous", level).standard_normal((CONTINUOUS_SUP_DRAWS, d + 1))
        cont = ParamBatch(g[:, :d], g[:, d].copy(), np.full(len(g), ctx.measure.t_uni),
                          np.full(len(g), -1))
    for chunk in range(0, len(cont), 1000):
        part = cont.take(np.arange(chunk, min(chunk + 1000, len(cont))))
        sup = max(sup, float(np.max(grid.weights @ ctx.features(level, part, X) ** 2)))
    if ctx.kernel.bounded:
        sup = min(sup, ctx.kernel.sup_bound**2)
    return sup


def probe_positions(n: int = N_PROBES) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def variance_check(ctx: LayeredKernelCtx, target: TargetFunction, N: int, trials: int, seed: int,
                   grid: SliceGrid | None = None, V_l: float | None = None) -> EstimatorReport:
    """Empirical E||f_hat_N - f||^2 over independent feature draws against (V_l / N) ||c||^2.

    Also returns the largest |mean - f| / SE over the probe positions, which
    tests unbiasedness of the estimator.
    """
    grid = grid or SliceGrid()
    level = target.level
    X = ctx.slice_points(grid.s)
    P = ctx.slice_points(probe_positions())
    f = eval_target(target, ctx, X)
    f_probe = eval_target(target, ctx, P)
    used, terms = _atom_terms(ctx, target.coeff, level, np.vstack([X, P]))
    n_grid = len(X)

    mses = np.empty(trials)
    probe_vals = np.empty((trials, len(P)))
    n_atoms = len(ctx.measure.atoms)
    for k in range(trials):
        atom = sample_atoms(ctx.measure, derive_seed(seed, "trials", k), N)
        counts = np.bincount(atom[atom >= 0], minlength=n_atoms)
        est = terms @ counts[used] / N if used.size else np.zeros(len(terms))
        mses[k] = slice_mse(grid, est[:n_grid], f)
        probe_vals[k] = est[n_grid:]

    mean_probe = probe_vals.mean(axis=0)
    se_probe = probe_vals.std(axis=0, ddof=1) / math.sqrt(trials)
    gap = np.abs(mean_probe - f_probe)
    # A probe where every trial agrees exactly has zero spread; it is biased only if it is off.
    z = np.where(se_probe > 0, gap / np.where(se_probe > 0, se_probe, 1.0), np.where(gap > 1e-12, np.inf, 0.0))

    c_sq = norm_l2(ctx.measure, target.coeff) ** 2
    V = compute_Vl(ctx, level, grid, seed) if V_l is None else V_l
    return EstimatorReport(
        N=N,
        empirical_mse=float(mses.mean()),
        mse_stderr=float(mses.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        variance_bound=V * c_sq / N,
        V_l=V,
        coeff_norm_sq=c_sq,
        trials=trials,
        max_abs_z=float(np.max(z)),
    )
