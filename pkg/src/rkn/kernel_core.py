"""Base kernel generators K(s, t) and the metadata the constructions rely on.

Two generators are provided: the ReLU ``max(0, s)`` (unbounded, used by the
slice construction with tent targets) and the bounded logistic-type
``(1 + tanh s) / 2`` used for the bounded-generator construction. Both ignore
the second argument ``t``.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np


class KernelKind(str, Enum):
    RELU = "relu"
    LOGISTIC = "logistic"


class NoWitness(ValueError):
    """No positive-value / positive-slope interval could be certified."""


@dataclass(frozen=True)
class A3Witness:
    """Interval ``(u0, u1)`` at ``t_plus`` where K >= c1 and dK/ds >= c2."""

    t_plus: float
    u0: float
    u1: float
    c1: float
    c2: float

    def __post_init__(self):
        if not self.u0 < self.u1:
            raise ValueError(f"need u0 < u1, got ({self.u0}, {self.u1})")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")

    def contains(self, u):
        u = np.asarray(u, dtype=float)
        return (u > self.u0) & (u < self.u1)


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    lipschitz_L: float
    sup_bound: float
    a3: A3Witness | None = None

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.sup_bound)

    def __call__(self, s, t=0.0):
        return evaluate(self, s, t)


def relu() -> KernelSpec:
    return KernelSpec(KernelKind.RELU, lipschitz_L=1.0, sup_bound=math.inf)


def logistic() -> KernelSpec:
    return KernelSpec(KernelKind.LOGISTIC, lipschitz_L=0.5, sup_bound=1.0)


def from_name(name: str) -> KernelSpec:
    kind = KernelKind(name)
    return relu() if kind is KernelKind.RELU else logistic()


def evaluate(spec: KernelSpec, s, t=0.0):
    """K(s, t). Vectorised over ``s``; ``t`` is accepted for interface parity."""
    s = np.asarray(s, dtype=float)
    if spec.kind is KernelKind.RELU:
        out = np.maximum(s, 0.0)
    else:
        out = 0.5 * (1.0 + np.tanh(s))
    return out if out.ndim else float(out)


def deriv1(spec: KernelSpec, s, t=0.0):
    """Derivative of K in its first argument (ReLU: 0 at the kink)."""
    s = np.asarray(s, dtype=float)
    if spec.kind is KernelKind.RELU:
        out = (s > 0.0).astype(float)
    else:
        out = 0.5 / np.cosh(s) ** 2
    return out if out.ndim else float(out)


def validate_a3(spec: KernelSpec, u0: float = 2.0, u1: float = 3.5, t_plus: float = 0.0,
                n_grid: int = 10_000) -> A3Witness:
    """Certify a positive-value, positive-slope interval for a bounded kernel.

    The constants are the infima of K and dK/ds over a uniform grid of
    ``n_grid`` points on ``[u0, u1]`` (endpoints included, so the open-interval
    infima are not overestimated for monotone profiles).

    Raises
    ------
    NoWitness
        If the kernel is unbounded, the interval is shorter than 1, or either
        infimum is not strictly positive.
    """
    if not spec.bounded:
        raise NoWitness(f"{spec.kind.value} kernel is unbounded")
    if not u1 - u0 > 1.0:
        raise NoWitness(f"interval ({u0}, {u1}) must be longer than 1 to hold s + B for s in [0, 1]")
    u = np.linspace(u0, u1, n_grid)
    c1 = float(np.min(evaluate(spec, u, t_plus)))
    c2 = float(np.min(deriv1(spec, u, t_plus)))
    if c1 <= 0.0 or c2 <= 0.0:
        raise NoWitness(f"grid infima c1={c1:.3g}, c2={c2:.3g} not positive on ({u0}, {u1})")
    return A3Witness(t_plus=t_plus, u0=u0, u1=u1, c1=c1, c2=c2)
