"""Depth-one approximants of the depth-two target and the shallow norm bounds."""

from dataclasses import dataclass
import math

import numpy as np

from rkn.layered_kernel import LayeredKernelCtx, derivative_grid, fd_derivative
from rkn.mc_estimator import SliceGrid, slice_mse
from rkn.param_measure import ParamBatch, UniformComponent, moments, sample
from rkn.rkhs_repr import TargetFunction, eval_target

DEFAULT_RIDGE = 1e-8
FALLBACK_RIDGE = 1e-10
PIVOT_TOL = 1e-12
AUDIT_SLACK = 1.05


class SingularSystem(np.linalg.LinAlgError):
    pass


@dataclass
class ShallowFit:
    features: ParamBatch
    alphas: np.ndarray
    ridge_lambda: float
    slice_error_sq: float
    norm_proxy: float
    retried: bool = False

    @property
    def N(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True)
class SlopeAudit:
    max_slope: float
    bound: float  # L_K * sigma_v * norm_proxy * 1.05, population sigma_v
    empirical_bound: float  # L_K * (mean <a_j, v>^2)^(1/2) * norm_proxy, exact by Cauchy-Schwarz

    @property
    def passed(self) -> bool:
        return self.max_slope <= self.bound


def _distinct_columns(ctx: LayeredKernelCtx, feats: ParamBatch):
    """Group draws that are the same parameter point.

    Atom draws group by atom index. Continuous draws are all identical under
    the point-mass uniform component and almost surely distinct otherwise.
    Returns (representatives, multiplicities, group id per draw).
    """
    n_atoms = len(ctx.measure.atoms)
    key = feats.atom.copy()
    cont = key < 0
    if ctx.measure.uni is UniformComponent.DEGENERATE_ZERO:
        key[cont] = n_atoms
    else:
        key[cont] = n_atoms + np.arange(int(cont.sum()))
    uniq, first, group, counts = np.unique(key, return_index=True, return_inverse=True, return_counts=True)
    return feats.take(first), counts, group


def _ridge_svd(F, y, penalty, allow_singular):
    U, S, Vt = np.linalg.svd(F, full_matrices=False)
    if penalty == 0.0:
        if not allow_singular and (S.size == 0 or S.min() <= PIVOT_TOL * max(S.max(), 1e-300)):
            raise SingularSystem("normal equations are rank deficient")
        inv = np.where(S > PIVOT_TOL * S.max(), 1.0 / np.where(S > 0, S, 1.0), 0.0)
    else:
        inv = S / (S**2 + penalty)
    return Vt.T @ (inv * (U.T @ y))


def fit_shallow(ctx: LayeredKernelCtx, target: TargetFunction, N: int, ridge_lambda: float = DEFAULT_RIDGE,
                seed=0, grid: SliceGrid | None = None, features: ParamBatch | None = None) -> ShallowFit:
    """Ridge fit of sum_j alpha_j psi^(1)_{z_j} to the target on the slice grid.

    Minimises slice_mse(q, h) + lambda * N * sum_j alpha_j^2 over N features
    drawn from rho with ``seed``. Repeated draws of one parameter point share
    one column; by symmetry of the penalty their coefficients are equal.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    grid = grid or SliceGrid()
    feats = sample(ctx.measure, seed, N) if features is None else features
    N = len(feats)
    X = ctx.slice_points(grid.s)
    y = eval_target(target, ctx, X)
    reps, mult, group = _distinct_columns(ctx, feats)
    root = np.sqrt(mult)
    F = ctx.features(1, reps, X) * root

    n = grid.n_points
    retried = False
    lam = ridge_lambda
    try:
        b = _ridge_svd(F, y, n * lam * N, allow_singular=False)
    except SingularSystem:
        retried, lam = True, FALLBACK_RIDGE
        b = _ridge_svd(F, y, n * lam * N, allow_singular=True)
    alphas = (b / root)[group]
    q = F @ b
    return ShallowFit(
        features=feats,
        alphas=alphas,
        ridge_lambda=lam,
        slice_error_sq=slice_mse(grid, q, y),
        norm_proxy=float(math.sqrt(N * np.sum(alphas**2))),
        retried=retried,
    )


def shallow_values(ctx: LayeredKernelCtx, fit: ShallowFit, s) -> np.ndarray:
    """q(s) = sum_j alpha_j psi^(1)_{z_j}(s v)."""
    reps, mult, group = _distinct_columns(ctx, fit.features)
    a = np.bincount(group, weights=fit.alphas)
    return ctx.features(1, reps, ctx.slice_points(s)) @ a


def slope_audit(fit: ShallowFit, ctx: LayeredKernelCtx, sigma_v: float | None = None) -> SlopeAudit:
    """Max |q'| on the derivative grid against L_K * sigma_v * norm_proxy.

    The population sigma_v bound carries 5% slack. The empirical bound uses
    the drawn features' own (mean <a_j, v>^2)^(1/2) and holds for every fit.
    """
    if sigma_v is None:
        sigma_v = moments(ctx.measure, ctx.kernel, seed=ctx.seed).sigma_v
    slopes = fd_derivative(lambda s: shallow_values(ctx, fit, s), derivative_grid())
    lip = ctx.kernel.lipschitz_L
    sigma_hat = math.sqrt(float(np.mean((fit.features.a @ ctx.v) ** 2)))
    return SlopeAudit(
        max_slope=float(np.max(np.abs(slopes))),
        bound=lip * sigma_v * fit.norm_proxy * AUDIT_SLACK,
        empirical_bound=lip * sigma_hat * fit.norm_proxy,
    )


def shallow_norm_lower_bound_relu(m_star, delta, sigma_v, eps, split=False) -> float:
    """(2 m_* / delta - sqrt(48) eps)_+ / sigma_v; ``split`` uses sqrt(24)."""
    c = math.sqrt(24.0 if split else 48.0)
    return max(2.0 * m_star / delta - c * eps, 0.0) / sigma_v


def shallow_norm_lower_bound_general(alpha, c2, m_star, L_K, sigma_v, eps, split=False) -> float:
    """(alpha c2 m_* - sqrt(12) eps)_+ / (L_K sigma_v); ``split`` uses sqrt(6)."""
    c = math.sqrt(6.0 if split else 12.0)
    return max(alpha * c2 * m_star - c * eps, 0.0) / (L_K * sigma_v)


def aligned_l2_gap(r_values, grid: SliceGrid | None = None) -> float:
    """min over constants c of int (r - c)^2, i.e. the grid variance of r."""
    r = np.asarray(r_values, dtype=float)
    w = (grid or SliceGrid(len(r))).weights
    mean = np.dot(w, r)
    return float(np.dot(w, (r - mean) ** 2))
