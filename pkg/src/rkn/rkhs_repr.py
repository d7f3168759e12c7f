"""Depth-two targets represented by atomic coefficient functions.

A function f = int c psi^(l) d rho is stored through its coefficient
function c, which here is always supported on finitely many rho_spec atoms.
``norm_l2`` gives ||c||_{L^2(rho)}, an upper bound on the RKHS norm of f.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from rkn import kernel_core
from rkn.kernel_core import A3Witness
from rkn.layered_kernel import (
    LayeredKernelCtx,
    ShiftInfeasible,
    SliceConstants,
    derivative_grid,
    fd_derivative,
    peak_position,
    shift_interval,
)
from rkn.param_measure import ATOM_BETA0, ATOM_BETA1, ATOM_BETA_HALF, ATOM_OUT, ParamMixture

__all__ = [
    "CoefficientFunction",
    "MissingAtoms",
    "ShiftInfeasible",
    "TargetFunction",
    "TargetKind",
    "build_general_target",
    "build_tent_target",
    "eval_target",
    "eval_via_rkhs",
    "general_range_ok",
    "norm_l2",
    "slice_target",
    "slope_on_slice",
    "tent",
]

PEAK_EXCLUSION_CELLS = 2


class MissingAtoms(ValueError):
    pass


class TargetKind(str, Enum):
    TENT_RELU = "tent_relu"
    GENERAL_K = "general_k"


@dataclass(frozen=True)
class CoefficientFunction:
    """Values of c at named atoms; zero everywhere else."""

    atom_values: dict = field(default_factory=dict)

    def __post_init__(self):
        if not all(math.isfinite(x) for x in self.atom_values.values()):
            raise ValueError("coefficient values must be finite")

    def check_support(self, measure: ParamMixture):
        missing = set(self.atom_values) - set(measure.atom_names)
        if missing:
            raise MissingAtoms(f"atoms {sorted(missing)} not in the measure")

    def on_atoms(self, measure: ParamMixture) -> np.ndarray:
        """Coefficient per atom index of ``measure``."""
        self.check_support(measure)
        return np.array([self.atom_values.get(name, 0.0) for name in measure.atom_names])


@dataclass(frozen=True)
class TargetFunction:
    kind: TargetKind
    coeff: CoefficientFunction
    norm_bound: float
    level: int = 2
    tent: tuple | None = None  # (beta0, beta_half, beta1, delta)
    alpha: float = 0.0
    b_out: float = 0.0
    t_plus: float = 0.0


def norm_l2(measure: ParamMixture, c: CoefficientFunction) -> float:
    vals = c.on_atoms(measure)
    return math.sqrt(math.fsum(measure.atom_masses * vals**2))


def tent(u, beta0, beta_half, beta1, delta):
    """Hat function on [beta0, beta1] with peak 1 at beta_half, from three ReLUs."""
    u = np.asarray(u, dtype=float)
    return (2.0 / delta) * np.maximum(u - beta0, 0.0) \
        - (4.0 / delta) * np.maximum(u - beta_half, 0.0) \
        + (2.0 / delta) * np.maximum(u - beta1, 0.0)


def build_tent_target(constants: SliceConstants, measure: ParamMixture) -> TargetFunction:
    names = (ATOM_BETA0, ATOM_BETA_HALF, ATOM_BETA1)
    if not set(names) <= set(measure.atom_names):
        raise MissingAtoms("tent target needs the three -beta atoms in the measure")
    for name, beta in zip(names, constants.betas):
        if abs(measure.atom(name).point.b + beta) > 1e-9 * max(1.0, abs(beta)):
            raise MissingAtoms(f"atom {name!r} sits at b={measure.atom(name).point.b}, expected {-beta}")
    delta = constants.delta
    coeff = CoefficientFunction({ATOM_BETA0: 16.0 / delta, ATOM_BETA_HALF: -32.0 / delta,
                                 ATOM_BETA1: 16.0 / delta})
    return TargetFunction(
        kind=TargetKind.TENT_RELU,
        coeff=coeff,
        norm_bound=8.0 * math.sqrt(3.0) / delta,
        tent=(constants.beta0, constants.beta_half, constants.beta1, delta),
    )


def build_general_target(witness: A3Witness, constants: SliceConstants, alpha: float,
                         w_out: float) -> TargetFunction:
    """alpha K(K^(1)(v, x) + b_out, t_plus) with c(z_out) = 2 alpha / w_out.

    ``b_out`` is the midpoint of the feasible shift interval.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if not w_out > 0:
        raise ValueError("w_out must be positive")
    lo, hi = shift_interval(constants, witness)
    coeff = CoefficientFunction({ATOM_OUT: 2.0 * alpha / w_out} if alpha else {})
    return TargetFunction(
        kind=TargetKind.GENERAL_K,
        coeff=coeff,
        norm_bound=alpha * math.sqrt(2.0 / w_out),
        alpha=float(alpha),
        b_out=0.5 * (lo + hi),
        t_plus=witness.t_plus,
    )


def _first_layer_on_v(ctx: LayeredKernelCtx, X) -> np.ndarray:
    return ctx.kernel_matrix(1, X, ctx.v[None])[:, 0]


def eval_target(target: TargetFunction, ctx: LayeredKernelCtx, X) -> np.ndarray:
    """Direct evaluation through the first-layer kernel K^(1)(v, x)."""
    u = _first_layer_on_v(ctx, X)
    if target.kind is TargetKind.TENT_RELU:
        return tent(u, *target.tent)
    return target.alpha * kernel_core.evaluate(ctx.kernel, u + target.b_out, target.t_plus)


def eval_via_rkhs(target: TargetFunction, ctx: LayeredKernelCtx, X) -> np.ndarray:
    """Sum over atoms of rho-mass * c(z) * psi^(2)_z(x)."""
    X = np.atleast_2d(X)
    c = target.coeff.on_atoms(ctx.measure)
    used = np.flatnonzero(c)
    if used.size == 0:
        return np.zeros(len(X))
    atoms = ctx.measure.atom_batch().take(used)
    psi = ctx.features(target.level, atoms, X)
    return psi @ (atoms.weight * c[used])


def slice_target(target: TargetFunction, ctx: LayeredKernelCtx, s) -> np.ndarray:
    """h(s) = f_2(s v)."""
    return eval_target(target, ctx, ctx.slice_points(s))


@dataclass(frozen=True)
class SlopeReport:
    s: np.ndarray
    abs_slope: np.ndarray
    tested: np.ndarray
    s_peak: float | None

    @property
    def min_flank(self) -> float:
        return float(np.min(self.abs_slope[self.tested]))


def slope_on_slice(target: TargetFunction, ctx: LayeredKernelCtx,
                   constants: SliceConstants | None = None) -> SlopeReport:
    """|h'| on the derivative grid, with the tent peak neighbourhood masked out."""
    s = derivative_grid()
    slopes = np.abs(fd_derivative(lambda x: slice_target(target, ctx, x), s))
    tested = np.ones_like(s, dtype=bool)
    s_peak = None
    if target.kind is TargetKind.TENT_RELU:
        if constants is None:
            raise ValueError("tent slope report needs the slice constants")
        s_peak = peak_position(ctx, constants)
        cell = s[1] - s[0]
        tested = np.abs(s - s_peak) > PEAK_EXCLUSION_CELLS * cell + 1e-12
    return SlopeReport(s, slopes, tested, s_peak)


def general_range_ok(target: TargetFunction, ctx: LayeredKernelCtx, witness: A3Witness) -> bool:
    """G(s) + b_out stays inside (u0, u1) on the whole grid."""
    g = ctx.slice_values(derivative_grid()) + target.b_out
    return bool(np.all(witness.contains(g)))
