"""Invariant suite behind ``rkn verify``.

Each check returns a CheckResult carrying a short diagnostic. Checks that
need the closed-form slice use the point-mass uniform component regardless
of the config, since only that case has an exact oracle.
"""

from dataclasses import dataclass
import math

import numpy as np

from rkn import kernel_core
from rkn.config import RunConfig
from rkn.layered_kernel import build_general_context, build_relu_context, derivative_grid
from rkn.mc_estimator import SliceGrid, compute_Vl, variance_check
from rkn.param_measure import UniformComponent, moments, sample
from rkn.rkhs_repr import build_tent_target, eval_target, eval_via_rkhs, norm_l2
from rkn.seeding import derive_rng
from rkn.shallow_probe import aligned_l2_gap

VARIANCE_NS = (32, 128, 512)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def check_lipschitz(config: RunConfig) -> CheckResult:
    rng = derive_rng(config.seed, "verify", "lipschitz")
    worst = []
    for spec in (kernel_core.relu(), kernel_core.logistic()):
        s, s2 = rng.normal(scale=5.0, size=(2, 10_000))
        t = rng.normal(size=10_000)
        ratio = np.abs(spec(s, t) - spec(s2, t)) / np.abs(s - s2)
        worst.append((spec.kind.value, float(ratio.max()), spec.lipschitz_L))
    ok = all(r <= L * (1 + 1e-12) for _, r, L in worst)
    try:
        w = kernel_core.validate_a3(kernel_core.logistic(), config.u0, config.u1, config.t_plus)
        witness = f"c1={w.c1:.6g} c2={w.c2:.6g}"
    except kernel_core.NoWitness as exc:
        ok, witness = False, f"no witness: {exc}"
    detail = "; ".join(f"{k}: max ratio {r:.6g} <= L={L:g}" for k, r, L in worst) + f"; logistic {witness}"
    return CheckResult("kernel_lipschitz", ok, detail)


def check_moments(config: RunConfig) -> CheckResult:
    ctx, _ = build_relu_context(7.0, config.dim, UniformComponent(config.uni), panel_size=config.panel_size,
                                seed=config.seed, provisional_betas=config.provisional_betas)
    rep = moments(ctx.measure, ctx.kernel, seed=config.seed)
    z = sample(ctx.measure, derive_rng(config.seed, "verify", "moments").integers(2**63), 100_000)
    proj2 = (z.a @ ctx.v) ** 2
    se = proj2.std(ddof=1) / math.sqrt(len(proj2))
    gap = abs(proj2.mean() - rep.sigma_v**2)
    ok = bool(gap <= 4 * se + 1e-12 and rep.M_penalty >= 0)
    return CheckResult("param_moments", ok,
                       f"sigma_v^2={rep.sigma_v**2:.6g}, sampled {proj2.mean():.6g} (SE {se:.2g}); M={rep.M_penalty:.6g}")


def check_layered(config: RunConfig) -> CheckResult:
    B = 7.0
    ctx, consts = build_relu_context(B, config.dim, UniformComponent.DEGENERATE_ZERO,
                                     panel_size=config.panel_size, seed=config.seed,
                                     provisional_betas=config.provisional_betas)
    s = derivative_grid()
    g_err = float(np.max(np.abs(ctx.slice_values(s) - (1 + B) * (s + B) / 8)))
    const_err = max(abs(x - y) for x, y in zip(
        (consts.beta0, consts.beta_half, consts.beta1, consts.delta, consts.m_star), (7, 7.5, 8, 1, 1)))
    worst_eig = math.inf
    X = derive_rng(config.seed, "verify", "gram").standard_normal((5, config.dim))
    for name in ("relu", "logistic"):
        for uni in UniformComponent:
            if name == "relu":
                c, _ = build_relu_context(B, config.dim, uni, panel_size=config.panel_size, seed=config.seed,
                                          provisional_betas=config.provisional_betas)
            else:
                w = kernel_core.validate_a3(kernel_core.logistic(), config.u0, config.u1, config.t_plus)
                c, _ = build_general_context(w, 2.4, config.weights, d=config.dim, uni=uni,
                                             panel_size=config.panel_size, seed=config.seed)
            for level in (1, 2, 3):
                G = c.gram(level, X)
                ev = np.linalg.eigvalsh(G)
                worst_eig = min(worst_eig, ev.min() / max(ev.max(), 1e-300))
    ok = bool(g_err <= 1e-12 and const_err <= 1e-6 and worst_eig >= -1e-8)
    return CheckResult("layered_kernel", ok,
                       f"|G - (1+B)(s+B)/8| {g_err:.2g}; constants err {const_err:.2g}; "
                       f"min relative eigenvalue {worst_eig:.3g}")


def _tent_case(config: RunConfig):
    ctx, consts = build_relu_context(7.0, config.dim, UniformComponent.DEGENERATE_ZERO,
                                     panel_size=config.panel_size, seed=config.seed,
                                     provisional_betas=config.provisional_betas)
    return ctx, consts, build_tent_target(consts, ctx.measure)


def check_path_identity(config: RunConfig) -> CheckResult:
    ctx, consts, target = _tent_case(config)
    X = ctx.slice_points(np.linspace(0, 1, 1001))
    err = float(np.max(np.abs(eval_target(target, ctx, X) - eval_via_rkhs(target, ctx, X))))
    norm_err = abs(norm_l2(ctx.measure, target.coeff) - 8 * math.sqrt(3) / consts.delta)
    ok = bool(err <= 1e-10 and norm_err <= 1e-12)
    return CheckResult("rkhs_path_identity", ok, f"sup gap {err:.2g}; norm gap {norm_err:.2g}")


def check_variance(config: RunConfig) -> CheckResult:
    ctx, _, target = _tent_case(config)
    grid = SliceGrid(config.n_grid)
    V2 = compute_Vl(ctx, 2, grid, config.seed)
    parts, ok = [], True
    for N in VARIANCE_NS:
        r = variance_check(ctx, target, N, config.verify_trials, config.seed, grid, V2)
        ok = ok and bool(r.passed)
        parts.append(f"N={N}: mse {r.empirical_mse:.4g} <= {r.variance_bound * r.slack:.4g}, max|z| {r.max_abs_z:.2f}")
    return CheckResult("mc_variance", ok, "; ".join(parts))


def exact_pl_variance(knots, values) -> float:
    """Variance over [0, 1] of the piecewise-linear interpolant, integrated per segment."""
    x, y = np.asarray(knots, float), np.asarray(values, float)
    h = np.diff(x)
    y0, y1 = y[:-1], y[1:]
    first = np.sum(h * (y0 + y1) / 2)
    second = np.sum(h * (y0**2 + y0 * y1 + y1**2) / 3)
    return float(second - first**2)


def check_gap_oracle(config: RunConfig) -> CheckResult:
    """aligned_l2_gap against exact integrals: 1/12 for r(s) = s, and random piecewise-linear r."""
    grid = SliceGrid(config.n_grid)
    linear = aligned_l2_gap(grid.s, grid)
    rng = derive_rng(config.seed, "verify", "gap")
    worst = 0.0
    for _ in range(100):
        # knots on cell boundaries, at least 50 cells apart, so the midpoint rule is near exact
        cells = np.sort(rng.choice(np.arange(1, grid.n_points // 50), rng.integers(1, 8), replace=False))
        knots = np.concatenate([[0.0], cells * 50 / grid.n_points, [1.0]])
        values = rng.normal(size=len(knots))
        r = np.interp(grid.s, knots, values)
        worst = max(worst, abs(aligned_l2_gap(r, grid) - exact_pl_variance(knots, values)))
    ok = bool(abs(linear - 1 / 12) <= 1e-6 and worst <= 1e-4)
    return CheckResult("aligned_gap", ok, f"linear gap {linear:.9f} vs 1/12; max quadrature error {worst:.2g}")


CHECKS = (check_lipschitz, check_moments, check_layered, check_path_identity, check_variance, check_gap_oracle)


def run_all(config: RunConfig):
    return [check(config) for check in CHECKS]
