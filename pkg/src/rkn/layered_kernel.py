"""Layered kernels K^(l), layer atoms psi^(l)_z and the slice function G.

Inner-layer integrals over rho are replaced by one fixed weighted panel:
the rho_spec atoms enter exactly with their masses and the continuous part
contributes equal-weight draws (a single point when rho_uni is the point
mass at zero). With the panel fixed, every K^(l) is deterministic and

    K^(l)(X, Y) = Psi_l(X) diag(w) Psi_l(Y)^T,   Psi_l(X)[i, p] = psi^(l)_{z_p}(x_i),

which is positive semidefinite by construction.
"""

from dataclasses import dataclass
import threading

import numpy as np
from scipy.optimize import brentq

from rkn import kernel_core
from rkn.kernel_core import A3Witness, KernelKind, KernelSpec
from rkn.param_measure import (
    ATOM_B,
    ATOM_OUT,
    BETA_ATOMS,
    ParamBatch,
    ParamMixture,
    UniformComponent,
    build_rho_general,
    build_rho_relu,
    moments,
    slice_fits_interval,
    unit_vector,
)
from rkn.seeding import derive_rng

DEFAULT_PANEL_SIZE = 4096
DERIV_GRID_POINTS = 1001
FD_STEP = 1.0 / 2000.0
# Placeholder betas for the first construction pass. Any value > 1 works:
# those atoms vanish on the slice, so G does not depend on them.
PROVISIONAL_BETAS = (1.5, 1.75, 2.0)


class NonPositiveSlope(RuntimeError):
    pass


class ShiftInfeasible(ValueError):
    pass


@dataclass(frozen=True)
class SliceConstants:
    beta0: float
    beta_half: float
    beta1: float
    delta: float
    m_star: float
    M_penalty: float
    m_star_analytic: float

    @property
    def betas(self):
        return (self.beta0, self.beta_half, self.beta1)


def build_panel(measure: ParamMixture, panel_size: int = DEFAULT_PANEL_SIZE, seed: int = 0) -> ParamBatch:
    """Quadrature panel for rho: exact atoms followed by the continuous part."""
    atoms = measure.atom_batch() if measure.atoms else None
    d = measure.dim
    if measure.uni is UniformComponent.DEGENERATE_ZERO:
        cont = ParamBatch(np.zeros((1, d)), np.zeros(1), np.full(1, measure.t_uni),
                          np.full(1, -1), np.array([0.5]))
    else:
        g = derive_rng(seed, "panel").standard_normal((panel_size, d + 1))
        cont = ParamBatch(g[:, :d], g[:, d].copy(), np.full(panel_size, measure.t_uni),
                          np.full(panel_size, -1), np.full(panel_size, 0.5 / panel_size))
    if atoms is None:
        return cont
    return ParamBatch(
        np.vstack([atoms.a, cont.a]),
        np.concatenate([atoms.b, cont.b]),
        np.concatenate([atoms.t, cont.t]),
        np.concatenate([atoms.atom, cont.atom]),
        np.concatenate([atoms.weight, cont.weight]),
    )


def derivative_grid(n: int = DERIV_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def fd_derivative(fn, s, step: float = FD_STEP) -> np.ndarray:
    """Central differences on the interior of [0, 1], one-sided at the ends.

    ``fn`` maps an array of slice positions to values.
    """
    s = np.asarray(s, dtype=float)
    lo = np.clip(s - step, 0.0, 1.0)
    hi = np.clip(s + step, 0.0, 1.0)
    return (fn(hi) - fn(lo)) / (hi - lo)


class LayeredKernelCtx:
    """Evaluator for K^(l), psi^(l)_z and the slice function G(s) = K^(1)(v, s v)."""

    def __init__(self, kernel: KernelSpec, measure: ParamMixture, depth_max: int = 3,
                 panel_size: int = DEFAULT_PANEL_SIZE, seed: int = 0,
                 witness: A3Witness | None = None):
        if depth_max < 1:
            raise ValueError("depth_max must be >= 1")
        self.kernel = kernel
        self.measure = measure
        self.depth_max = depth_max
        self.panel_size = panel_size
        self.seed = seed
        self.witness = witness
        self.panel = build_panel(measure, panel_size, seed)
        self._panel_self = {}
        self._slice_cache = {}
        self._lock = threading.Lock()

    @property
    def v(self) -> np.ndarray:
        return self.measure.direction_v

    def _check_level(self, level):
        if not 1 <= level <= self.depth_max:
            raise ValueError(f"level must be in [1, {self.depth_max}], got {level}")

    def features(self, level: int, zs: ParamBatch, X) -> np.ndarray:
        """Matrix of psi^(level)_{z_j}(x_i), shape (len(X), len(zs))."""
        self._check_level(level)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if level == 1:
            pre = X @ zs.a.T
        else:
            pre = self.kernel_matrix(level - 1, X, zs.a)
        return kernel_core.evaluate(self.kernel, pre + zs.b, zs.t)

    def _panel_on_panel(self, level):
        # Psi_level evaluated at the panel's own a-vectors; reused by level + 1.
        with self._lock:
            cached = self._panel_self.get(level)
        if cached is None:
            cached = self.features(level, self.panel, self.panel.a)
            with self._lock:
                self._panel_self[level] = cached
        return cached

    def panel_features(self, level: int, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if level >= 2 and X is self.panel.a:
            return self._panel_on_panel(level)
        return self.features(level, self.panel, X)

    def kernel_matrix(self, level: int, X, Y) -> np.ndarray:
        """K^(level)(x_i, y_j) for all pairs, shape (len(X), len(Y))."""
        FX = self.panel_features(level, X)
        if Y is self.panel.a and level >= 1:
            FY = self._panel_on_panel(level)
        else:
            FY = self.panel_features(level, Y)
        return (FX * self.panel.weight) @ FY.T

    def kernel_eval(self, level: int, x, x2) -> float:
        """K^(level)(x, x2); exactly symmetric in its arguments."""
        fx = self.panel_features(level, np.asarray(x, dtype=float)[None])[0]
        fy = self.panel_features(level, np.asarray(x2, dtype=float)[None])[0]
        return float(np.sum(self.panel.weight * (fx * fy)))

    def gram(self, level: int, X) -> np.ndarray:
        F = self.panel_features(level, X) * np.sqrt(self.panel.weight)
        K = F @ F.T
        return 0.5 * (K + K.T)

    def atom_psi(self, level: int, z, x) -> float:
        zs = ParamBatch.from_points([z])
        return float(self.features(level, zs, np.asarray(x, dtype=float)[None])[0, 0])

    def slice_values(self, s) -> np.ndarray:
        """G at each position in ``s``, memoised per position."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        with self._lock:
            missing = np.array([x for x in np.unique(s) if x not in self._slice_cache])
        if missing.size:
            fv = self.panel_features(1, self.v[None])[0]
            fs = self.panel_features(1, missing[:, None] * self.v)
            vals = np.sum(self.panel.weight * (fs * fv), axis=1)
            with self._lock:
                self._slice_cache.update(zip(missing.tolist(), vals.tolist()))
        with self._lock:
            return np.array([self._slice_cache[x] for x in s.tolist()])

    def slice_G(self, s: float) -> float:
        return float(self.slice_values([s])[0])

    def slice_points(self, s) -> np.ndarray:
        """Points s v in R^d for positions s."""
        return np.outer(np.atleast_1d(s), self.v)


def kernel_eval(ctx: LayeredKernelCtx, level, x, x2):
    return ctx.kernel_eval(level, x, x2)


def atom_psi(ctx: LayeredKernelCtx, level, z, x):
    return ctx.atom_psi(level, z, x)


def slice_G(ctx: LayeredKernelCtx, s):
    return ctx.slice_G(s)


def slice_derivative(ctx: LayeredKernelCtx, s=None) -> np.ndarray:
    s = derivative_grid() if s is None else s
    return fd_derivative(ctx.slice_values, s)


def _analytic_m_star(ctx: LayeredKernelCtx, M: float) -> float:
    measure = ctx.measure
    w_B = measure.atom(ATOM_B).weight
    if ctx.kernel.kind is KernelKind.RELU:
        B = measure.atom(ATOM_B).point.b
        return 0.5 * w_B * (1.0 + B) - M
    if ctx.witness is None:
        raise ValueError("bounded-kernel slope bound needs a positive-slope witness")
    w_aux = sum(measure.atom(name).weight for name in BETA_ATOMS if name in measure.atom_names)
    k = ctx.kernel
    return 0.5 * (w_B * ctx.witness.c1 * ctx.witness.c2 - w_aux * k.sup_bound * k.lipschitz_L) - M


def finalize_constants(ctx: LayeredKernelCtx) -> SliceConstants:
    """Betas from G, the slope floor m_* (grid minimum of G') and its analytic bound."""
    g0, g1 = ctx.slice_values([0.0, 1.0])
    m_star = float(np.min(slice_derivative(ctx)))
    M = moments(ctx.measure, ctx.kernel, seed=ctx.seed).M_penalty
    consts = SliceConstants(
        beta0=float(g0), beta_half=float(0.5 * (g0 + g1)), beta1=float(g1),
        delta=float(g1 - g0), m_star=m_star, M_penalty=M,
        m_star_analytic=_analytic_m_star(ctx, M),
    )
    if m_star <= 0.0:
        raise NonPositiveSlope(f"min G' on the grid is {m_star:.3g}; retune the construction")
    return consts


def shift_interval(consts: SliceConstants, witness: A3Witness):
    """Open interval of output shifts b with [beta0 + b, beta1 + b] inside (u0, u1)."""
    lo, hi = witness.u0 - consts.beta0, witness.u1 - consts.beta1
    if not hi > lo:
        raise ShiftInfeasible(
            f"slice range delta={consts.delta:.6g} does not fit in ({witness.u0}, {witness.u1})")
    return lo, hi


def peak_position(ctx: LayeredKernelCtx, consts: SliceConstants) -> float:
    """The s where G(s) = beta_half."""
    return brentq(lambda s: ctx.slice_G(s) - consts.beta_half, 0.0, 1.0, xtol=1e-14)


def build_relu_context(B, d=5, uni=UniformComponent.DEGENERATE_ZERO, v=None, depth_max=3,
                       panel_size=DEFAULT_PANEL_SIZE, seed=0, provisional_betas=PROVISIONAL_BETAS):
    """Two-pass ReLU construction; returns ``(ctx, constants)``.

    Pass one fixes G with placeholder beta atoms, pass two installs the betas
    read off G and checks that G is unchanged.
    """
    v = unit_vector(d) if v is None else np.asarray(v, dtype=float)
    grid = derivative_grid()
    first = LayeredKernelCtx(kernel_core.relu(), build_rho_relu(d, v, B, provisional_betas, uni),
                             depth_max, panel_size, seed)
    g_first = first.slice_values(grid)
    betas = (g_first[0], 0.5 * (g_first[0] + g_first[-1]), g_first[-1])
    ctx = LayeredKernelCtx(kernel_core.relu(), build_rho_relu(d, v, B, betas, uni),
                           depth_max, panel_size, seed)
    drift = np.max(np.abs(ctx.slice_values(grid) - g_first))
    if drift > 1e-12:
        raise RuntimeError(f"slice function moved by {drift:.3g} after installing beta atoms")
    return ctx, finalize_constants(ctx)


def build_general_context(witness: A3Witness, B, weights, kernel=None, d=5,
                          uni=UniformComponent.DEGENERATE_ZERO, v=None, depth_max=3,
                          panel_size=DEFAULT_PANEL_SIZE, seed=0, tol=1e-15, max_iter=100):
    """Bounded-kernel construction with beta atoms and the output atom.

    Both the beta atoms and the output atom feed back into G, so betas and
    the output shift are iterated to a fixed point. The output shift is the
    midpoint of the feasible interval. Returns ``(ctx, constants)``.
    """
    kernel = kernel or kernel_core.logistic()
    if not kernel.bounded:
        raise ValueError("the general construction needs a bounded kernel")
    if not slice_fits_interval(B, witness.u0, witness.u1):
        raise ValueError(f"s + B must stay in ({witness.u0}, {witness.u1}) for s in [0, 1]; B={B}")
    v = unit_vector(d) if v is None else np.asarray(v, dtype=float)
    betas = (0.0, 0.0, 0.0)
    b_out = 0.5 * (witness.u0 + witness.u1)
    for _ in range(max_iter):
        measure = build_rho_general(d, v, B, weights, betas, b_out, witness.t_plus, uni)
        ctx = LayeredKernelCtx(kernel, measure, depth_max, panel_size, seed, witness)
        g0, g1 = ctx.slice_values([0.0, 1.0])
        new_betas = (g0, 0.5 * (g0 + g1), g1)
        lo, hi = witness.u0 - g0, witness.u1 - g1
        if not hi > lo:
            raise ShiftInfeasible(f"slice range delta={g1 - g0:.6g} does not fit in "
                                  f"({witness.u0}, {witness.u1})")
        new_b_out = 0.5 * (lo + hi)
        change = max(abs(new_b_out - b_out), *(abs(x - y) for x, y in zip(new_betas, betas)))
        betas, b_out = new_betas, new_b_out
        if change <= tol:
            break
    else:
        raise RuntimeError("beta / output-shift iteration did not converge")
    measure = build_rho_general(d, v, B, weights, betas, b_out, witness.t_plus, uni)
    ctx = LayeredKernelCtx(kernel, measure, depth_max, panel_size, seed, witness)
    consts = finalize_constants(ctx)
    assert abs(ctx.measure.atom(ATOM_OUT).point.b - midpoint_shift(consts, witness)) < 1e-12
    return ctx, consts


def midpoint_shift(consts: SliceConstants, witness: A3Witness) -> float:
    lo, hi = shift_interval(consts, witness)
    return 0.5 * (lo + hi)
