"""Monte Carlo sample complexity of deep and shallow representations across a B sweep.

For each B the deep side is the outer-layer estimator of the depth-two
target with its atomic coefficient function; the shallow side is the best
ridge fit over N first-layer features. Both report the minimal N whose mean
slice MSE over a fixed set of trial seeds is at most eps^2.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np

from rkn import kernel_core
from rkn.config import RunConfig
from rkn.kernel_core import validate_a3
from rkn.layered_kernel import build_general_context, build_relu_context
from rkn.mc_estimator import SliceGrid, _atom_terms, compute_Vl, slice_mse
from rkn.param_measure import UniformComponent, moments, sample_atoms
from rkn.rkhs_repr import build_general_target, build_tent_target, eval_target, norm_l2
from rkn.seeding import derive_int_seed
from rkn.shallow_probe import (
    fit_shallow,
    shallow_norm_lower_bound_general,
    shallow_norm_lower_bound_relu,
    slope_audit,
)

CSV_HEADER = ["B", "m_star", "delta", "N_deep", "N_shallow", "ratio", "censored"]
FITS_HEADER = ["B", "N", "seed", "error_sq", "norm_proxy", "max_slope"]
MIN_ROWS_FOR_EXPONENT = 3


class CapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ComplexityProbe:
    eps: float
    trials: int = 40
    N_cap: int = 2**20
    seed: int = 0
    ridge_lambda: float = 1e-8
    n_grid: int = 1001


@dataclass
class SearchResult:
    N: int
    censored: bool
    evaluations: dict = field(default_factory=dict)  # N -> mean slice MSE


def minimal_n(mean_error, threshold, N_cap) -> SearchResult:
    """Smallest N in [1, N_cap] with mean_error(N) <= threshold.

    Doubles N until the predicate holds, then bisects down to a boundary
    where it holds at N and fails at N - 1. Censored at N_cap otherwise.
    """
    evals = {}

    def ok(n):
        if n not in evals:
            evals[n] = float(mean_error(n))
        return evals[n] <= threshold

    prev, n = 0, 1
    while not ok(n):
        if n >= N_cap:
            return SearchResult(N_cap, True, evals)
        prev, n = n, min(2 * n, N_cap)
    lo, hi = prev, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return SearchResult(hi, False, evals)


def trial_seeds(probe: ComplexityProbe, side: str, B: float):
    return [derive_int_seed(probe.seed, side, repr(float(B)), k) for k in range(probe.trials)]


@dataclass
class DeepResult:
    N: int
    censored: bool
    analytic_N: int
    V2: float
    coeff_norm_sq: float
    evaluations: dict


def deep_mean_error(ctx, target, probe: ComplexityProbe, B=0.0):
    """Callable N -> mean over trials of the estimator's slice MSE."""
    grid = SliceGrid(probe.n_grid)
    X = ctx.slice_points(grid.s)
    f = eval_target(target, ctx, X)
    used, terms = _atom_terms(ctx, target.coeff, target.level, X)
    n_atoms = len(ctx.measure.atoms)
    seeds = trial_seeds(probe, "deep", B)

    def mean_error(N):
        total = 0.0
        for seed in seeds:
            atom = sample_atoms(ctx.measure, seed, N)
            if used.size == 0:
                est = np.zeros_like(f)
            else:
                counts = np.bincount(atom[atom >= 0], minlength=n_atoms)[used]
                est = terms @ counts / N
            total += slice_mse(grid, est, f)
        return total / len(seeds)

    return mean_error


def probe_deep(ctx, target, probe: ComplexityProbe, B=0.0, V2=None) -> DeepResult:
    if not probe.eps > 0:
        raise ValueError("eps must be positive")
    res = minimal_n(deep_mean_error(ctx, target, probe, B), probe.eps**2, probe.N_cap)
    V2 = compute_Vl(ctx, target.level, SliceGrid(probe.n_grid), probe.seed) if V2 is None else V2
    c_sq = norm_l2(ctx.measure, target.coeff) ** 2
    analytic = max(1, math.ceil(V2 * c_sq / probe.eps**2))
    return DeepResult(res.N, res.censored, analytic, V2, c_sq, res.evaluations)


@dataclass(frozen=True)
class FitRecord:
    B: float
    N: int
    seed: int
    error_sq: float
    norm_proxy: float
    max_slope: float
    slope_bound: float
    audit_passed: bool


@dataclass
class ShallowResult:
    N: int
    censored: bool
    records: list
    evaluations: dict


def probe_shallow(ctx, target, probe: ComplexityProbe, n_grid_of_N=None, B=0.0, audit=True) -> ShallowResult:
    """Minimal N for which the mean ridge-fit error over trial seeds is <= eps^2.

    With ``n_grid_of_N`` the candidates are that ascending list instead of
    the doubling/bisection search.
    """
    grid = SliceGrid(probe.n_grid)
    seeds = trial_seeds(probe, "shallow", B)
    sigma_v = moments(ctx.measure, ctx.kernel, seed=ctx.seed).sigma_v
    records = []

    def mean_error(N):
        errs = []
        for seed in seeds:
            fit = fit_shallow(ctx, target, N, probe.ridge_lambda, seed, grid)
            errs.append(fit.slice_error_sq)
            if audit:
                a = slope_audit(fit, ctx, sigma_v)
                records.append(FitRecord(B, N, seed, fit.slice_error_sq, fit.norm_proxy,
                                         a.max_slope, a.bound, a.passed))
            else:
                records.append(FitRecord(B, N, seed, fit.slice_error_sq, fit.norm_proxy,
                                         math.nan, math.nan, True))
        return float(np.mean(errs))

    if n_grid_of_N is None:
        res = minimal_n(mean_error, probe.eps**2, probe.N_cap)
    else:
        evals = {}
        res = None
        for N in sorted(int(n) for n in n_grid_of_N):
            evals[N] = mean_error(N)
            if evals[N] <= probe.eps**2:
                res = SearchResult(N, False, evals)
                break
        if res is None:
            res = SearchResult(max(evals), True, evals)
    records.sort(key=lambda r: (r.N, r.seed))
    return ShallowResult(res.N, res.censored, records, res.evaluations)


@dataclass
class SeparationRow:
    B: float
    m_star: float
    delta: float
    N_deep: int
    N_shallow: int
    ratio: float
    censored: bool
    deep_censored: bool
    shallow_censored: bool
    m_star_analytic: float
    N_deep_analytic: int
    V2: float
    sigma_v: float
    shallow_norm_floor: float
    min_norm_proxy: float | None


@dataclass
class SeparationReport:
    rows: list
    fits: list
    fitted_exponent: float | None
    norm_exponent: float | None
    config: dict
    seeds: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seeds": self.seeds,
            "fitted_exponent": self.fitted_exponent,
            "norm_exponent": self.norm_exponent,
            "rows": [asdict(r) for r in self.rows],
        }


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def build_case(config: RunConfig, B: float):
    """Context, slice constants and depth-two target for one B."""
    uni = UniformComponent(config.uni)
    if config.mode == "relu":
        ctx, consts = build_relu_context(B, config.dim, uni, depth_max=config.depth_max,
                                         panel_size=config.panel_size, seed=config.seed,
                                         provisional_betas=config.provisional_betas)
        return ctx, consts, build_tent_target(consts, ctx.measure)
    kernel = kernel_core.from_name(config.kernel)
    witness = validate_a3(kernel, config.u0, config.u1, config.t_plus)
    ctx, consts = build_general_context(witness, B, config.weights, kernel, config.dim, uni,
                                        depth_max=config.depth_max, panel_size=config.panel_size,
                                        seed=config.seed)
    return ctx, consts, build_general_target(witness, consts, config.alpha, config.weights[4])


def probe_from_config(config: RunConfig) -> ComplexityProbe:
    return ComplexityProbe(eps=config.eps, trials=config.trials, N_cap=config.N_cap, seed=config.seed,
                           ridge_lambda=config.ridge_lambda, n_grid=config.n_grid)


def sweep_row(config: RunConfig, B: float):
    ctx, consts, target = build_case(config, B)
    probe = probe_from_config(config)
    deep = probe_deep(ctx, target, probe, B)
    shallow = probe_shallow(ctx, target, probe, B=B)
    sigma_v = moments(ctx.measure, ctx.kernel, seed=ctx.seed).sigma_v
    if config.mode == "relu":
        floor = shallow_norm_lower_bound_relu(consts.m_star, consts.delta, sigma_v, config.eps)
    else:
        floor = shallow_norm_lower_bound_general(config.alpha, ctx.witness.c2, consts.m_star,
                                                 ctx.kernel.lipschitz_L, sigma_v, config.eps)
    eps_sq = config.eps**2
    ok = [r.norm_proxy for r in shallow.records if r.error_sq <= eps_sq]
    row = SeparationRow(
        B=float(B), m_star=consts.m_star, delta=consts.delta,
        N_deep=deep.N, N_shallow=shallow.N, ratio=shallow.N / deep.N,
        censored=deep.censored or shallow.censored,
        deep_censored=deep.censored, shallow_censored=shallow.censored,
        m_star_analytic=consts.m_star_analytic, N_deep_analytic=deep.analytic_N, V2=deep.V2,
        sigma_v=sigma_v, shallow_norm_floor=floor,
        min_norm_proxy=min(ok) if ok else None,
    )
    return row, shallow.records


def sweep(config: RunConfig) -> SeparationReport:
    """Run both probes for every B; rows come back sorted by B."""
    Bs = sorted(config.B_list)
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(sweep_row, [config] * len(Bs), Bs))
    else:
        results = [sweep_row(config, B) for B in Bs]
    rows = [r for r, _ in results]
    fits = [f for _, recs in results for f in recs]

    clean = [r for r in rows if not r.censored]
    exponent = None
    if len(clean) >= MIN_ROWS_FOR_EXPONENT:
        exponent = loglog_slope([r.m_star for r in clean], [r.ratio for r in clean])
    normed = [r for r in rows if r.min_norm_proxy is not None]
    norm_exponent = None
    if len(normed) >= MIN_ROWS_FOR_EXPONENT:
        norm_exponent = loglog_slope([r.m_star for r in normed], [r.min_norm_proxy for r in normed])
    seeds = {
        "root": config.seed,
        "derivation": "SeedSequence(root, spawn_key=labels); labels ('deep'|'shallow', B, trial)",
    }
    return SeparationReport(rows, fits, exponent, norm_exponent, config.to_dict(), seeds)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(report: SeparationReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])


def write_fits_csv(report: SeparationReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FITS_HEADER)
        for r in report.fits:
            w.writerow([_fmt(getattr(r, k)) for k in FITS_HEADER])


def write_json(report: SeparationReport, path):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
