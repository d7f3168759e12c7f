"""The parameter measure rho = 1/2 rho_uni + 1/2 rho_spec on Z = R^d x R x R.

rho_spec is a finite set of named atoms along a unit direction ``v``; rho_uni
is either a point mass at ``a = 0, b = 0`` or a standard Gaussian in
``(a, b)``. Each atom with weight ``w`` carries overall rho-mass ``w / 2``.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from rkn.kernel_core import KernelKind, KernelSpec, relu
from rkn.seeding import child_seed, derive_rng


class BadBetas(ValueError):
    pass


class BadWeights(ValueError):
    pass


class UniformComponent(str, Enum):
    DEGENERATE_ZERO = "degenerate_zero"
    STANDARD_GAUSSIAN = "standard_gaussian"


# Atom names, in the order the constructions list them.
ATOM_B = "B"
ATOM_BETA0 = "beta0"
ATOM_BETA_HALF = "beta_half"
ATOM_BETA1 = "beta1"
ATOM_OUT = "out"
BETA_ATOMS = (ATOM_BETA0, ATOM_BETA_HALF, ATOM_BETA1)

# Draw count of the fixed panel used for the Gaussian penalty integral.
PENALTY_PANEL_SIZE = 100_000


@dataclass(frozen=True)
class ParamPoint:
    a: np.ndarray
    b: float
    t: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        object.__setattr__(self, "a", a)
        if not (np.all(np.isfinite(a)) and math.isfinite(self.b) and math.isfinite(self.t)):
            raise ValueError("ParamPoint entries must be finite")

    def __eq__(self, other):
        if not isinstance(other, ParamPoint):
            return NotImplemented
        return np.array_equal(self.a, other.a) and self.b == other.b and self.t == other.t

    def __hash__(self):
        return hash((self.a.tobytes(), self.b, self.t))


@dataclass(frozen=True)
class Atom:
    name: str
    point: ParamPoint
    weight: float


@dataclass
class ParamBatch:
    """Struct-of-arrays view of many parameter points.

    ``atom`` holds the index of the rho_spec atom each row came from, or -1
    for rows drawn from the continuous (uniform) component. ``weight`` is
    the quadrature weight when the batch is used as a panel.
    """

    a: np.ndarray
    b: np.ndarray
    t: np.ndarray
    atom: np.ndarray
    weight: np.ndarray | None = None

    def __len__(self):
        return len(self.b)

    def __getitem__(self, i):
        return ParamPoint(self.a[i], float(self.b[i]), float(self.t[i]))

    def points(self):
        return [self[i] for i in range(len(self))]

    def take(self, idx):
        idx = np.asarray(idx)
        w = None if self.weight is None else self.weight[idx]
        return ParamBatch(self.a[idx], self.b[idx], self.t[idx], self.atom[idx], w)

    @classmethod
    def from_points(cls, points, atom=None, weight=None):
        points = list(points)
        a = np.stack([p.a for p in points])
        b = np.array([p.b for p in points], dtype=float)
        t = np.array([p.t for p in points], dtype=float)
        atom = np.full(len(points), -1, dtype=int) if atom is None else np.asarray(atom, dtype=int)
        w = None if weight is None else np.asarray(weight, dtype=float)
        return cls(a, b, t, atom, w)


@dataclass(frozen=True)
class ParamMixture:
    dim: int
    direction_v: np.ndarray
    uni: UniformComponent
    atoms: tuple = field(default_factory=tuple)
    t_uni: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.direction_v, dtype=float).reshape(-1)
        object.__setattr__(self, "direction_v", v)
        object.__setattr__(self, "uni", UniformComponent(self.uni))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if self.dim < 1 or v.shape != (self.dim,):
            raise ValueError(f"direction_v must have shape ({self.dim},)")
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("direction_v must be a unit vector")
        weights = [atom.weight for atom in self.atoms]
        if any(w < 0 for w in weights):
            raise BadWeights("atom weights must be nonnegative")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise BadWeights(f"atom weights sum to {math.fsum(weights)!r}, not 1")
        for atom in self.atoms:
            if atom.point.a.shape != (self.dim,):
                raise ValueError(f"atom {atom.name!r} has wrong dimension")

    @property
    def atom_names(self):
        return [atom.name for atom in self.atoms]

    def index(self, name: str) -> int:
        try:
            return self.atom_names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def atom(self, name: str) -> Atom:
        return self.atoms[self.index(name)]

    def mass(self, name: str) -> float:
        """Overall rho-mass of a named atom."""
        return 0.5 * self.atom(name).weight

    @property
    def atom_masses(self) -> np.ndarray:
        return 0.5 * np.array([atom.weight for atom in self.atoms])

    def atom_batch(self) -> ParamBatch:
        return ParamBatch.from_points(
            [atom.point for atom in self.atoms],
            atom=np.arange(len(self.atoms)),
            weight=self.atom_masses,
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "direction_v": self.direction_v.tolist(),
            "uni": self.uni.value,
            "t_uni": self.t_uni,
            "atoms": [
                {"name": atom.name, "a": atom.point.a.tolist(), "b": atom.point.b,
                 "t": atom.point.t, "weight": atom.weight}
                for atom in self.atoms
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParamMixture":
        atoms = [
            Atom(x["name"], ParamPoint(np.array(x["a"], dtype=float), float(x["b"]), float(x["t"])),
                 float(x["weight"]))
            for x in d["atoms"]
        ]
        return cls(int(d["dim"]), np.array(d["direction_v"], dtype=float),
                   UniformComponent(d["uni"]), tuple(atoms), float(d.get("t_uni", 0.0)))


@dataclass(frozen=True)
class MomentReport:
    sigma_v: float
    second_moment_a: float
    second_moment_ab: float
    M_penalty: float
    M_stderr: float = 0.0


def unit_vector(d: int, axis: int = 0) -> np.ndarray:
    v = np.zeros(d)
    v[axis] = 1.0
    return v


def build_rho_relu(d, v, B, betas, uni=UniformComponent.DEGENERATE_ZERO, t=0.0) -> ParamMixture:
    """Four equally weighted atoms (v, B), (v, -beta0), (v, -beta_half), (v, -beta1)."""
    betas = tuple(float(x) for x in betas)
    if len(betas) != 3 or any(not beta > 1.0 for beta in betas):
        raise BadBetas(f"all of beta0, beta_half, beta1 must exceed 1, got {betas}")
    if not B > 0:
        raise ValueError(f"B must be positive, got {B}")
    v = np.asarray(v, dtype=float)
    atoms = [Atom(ATOM_B, ParamPoint(v, float(B), t), 0.25)]
    atoms += [Atom(name, ParamPoint(v, -beta, t), 0.25) for name, beta in zip(BETA_ATOMS, betas)]
    return ParamMixture(d, v, uni, tuple(atoms), t_uni=t)


def build_rho_general(d, v, B, weights, betas, b_out, t_plus,
                      uni=UniformComponent.DEGENERATE_ZERO) -> ParamMixture:
    """Atoms (v, B), (v, -beta_k) and the output atom (v, b_out), all at t_plus.

    ``weights`` is ``(w_B, w_0, w_half, w_1, w_out)``.
    """
    weights = tuple(float(w) for w in weights)
    if len(weights) != 5:
        raise BadWeights("expected five weights (w_B, w_0, w_half, w_1, w_out)")
    if any(w < 0 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-12:
        raise BadWeights(f"weights must be nonnegative and sum to 1, got {weights}")
    v = np.asarray(v, dtype=float)
    w_B, w0, w_half, w1, w_out = weights
    atoms = [Atom(ATOM_B, ParamPoint(v, float(B), t_plus), w_B)]
    atoms += [Atom(name, ParamPoint(v, -float(beta), t_plus), w)
              for name, beta, w in zip(BETA_ATOMS, betas, (w0, w_half, w1))]
    atoms.append(Atom(ATOM_OUT, ParamPoint(v, float(b_out), t_plus), w_out))
    return ParamMixture(d, v, uni, tuple(atoms), t_uni=t_plus)


def slice_fits_interval(B, u0, u1) -> bool:
    """True when s + B lies in the open interval (u0, u1) for every s in [0, 1]."""
    return u0 < B and B + 1.0 < u1


def sample_atoms(m: ParamMixture, seed, n: int) -> np.ndarray:
    """Atom index of each of ``n`` draws (-1 for the continuous component).

    Identical to ``sample(m, seed, n).atom`` without drawing coordinates.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u = np.random.default_rng(child_seed(seed, 0)).random(n)
    atom = np.full(n, -1, dtype=int)
    from_spec = u >= 0.5
    if m.atoms:
        cum = np.cumsum([x.weight for x in m.atoms])
        cum[-1] = 1.0
        idx = np.searchsorted(cum, 2.0 * (u[from_spec] - 0.5), side="right")
        atom[from_spec] = np.minimum(idx, len(m.atoms) - 1)
    return atom


def sample(m: ParamMixture, seed, n: int) -> ParamBatch:
    """Draw ``n`` i.i.d. points from rho, deterministically in ``seed``.

    Component selection and Gaussian coordinates come from separate child
    streams, so ``sample(m, seed, n)`` is a prefix of ``sample(m, seed, n + 1)``.
    """
    atom = sample_atoms(m, seed, n)
    d = m.dim
    a = np.zeros((n, d))
    b = np.zeros(n)
    t = np.full(n, m.t_uni)
    hit = atom >= 0
    if hit.any():
        pts = m.atom_batch()
        a[hit] = pts.a[atom[hit]]
        b[hit] = pts.b[atom[hit]]
        t[hit] = pts.t[atom[hit]]
    if m.uni is UniformComponent.STANDARD_GAUSSIAN:
        g = np.random.default_rng(child_seed(seed, 1)).standard_normal((n, d + 1))
        cont = ~hit
        a[cont] = g[cont, :d]
        b[cont] = g[cont, d]
    return ParamBatch(a, b, t, atom)


def moments(m: ParamMixture, kernel: KernelSpec | None = None, seed: int = 0) -> MomentReport:
    """sigma_v, second moments and the uniform-part slope penalty M.

    For the ReLU kernel, M = 1/2 E_uni[relu(<a,v> + b) |<a,v>|], estimated on
    a fixed panel of Gaussian draws. For bounded kernels,
    M = 1/2 ||K||_inf L_K (E_uni <a,v>^2)^(1/2), which is closed form.
    """
    kernel = kernel or relu()
    masses = m.atom_masses
    atoms = m.atom_batch() if m.atoms else None
    proj = atoms.a @ m.direction_v if atoms is not None else np.zeros(0)
    sq_a = np.sum(atoms.a**2, axis=1) if atoms is not None else np.zeros(0)
    sq_b = atoms.b**2 if atoms is not None else np.zeros(0)

    gaussian = m.uni is UniformComponent.STANDARD_GAUSSIAN
    uni_proj2 = 1.0 if gaussian else 0.0
    sigma_v = math.sqrt(0.5 * uni_proj2 + float(masses @ proj**2))
    second_a = 0.5 * (m.dim if gaussian else 0.0) + float(masses @ sq_a)
    second_ab = second_a + 0.5 * (1.0 if gaussian else 0.0) + float(masses @ sq_b)

    M, se = 0.0, 0.0
    if gaussian:
        if kernel.kind is KernelKind.RELU:
            g = derive_rng(seed, "penalty-panel").standard_normal((PENALTY_PANEL_SIZE, 2))
            vals = 0.5 * np.maximum(g[:, 0] + g[:, 1], 0.0) * np.abs(g[:, 0])
            M = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
        else:
            M = 0.5 * kernel.sup_bound * kernel.lipschitz_L * math.sqrt(uni_proj2)
    return MomentReport(sigma_v, second_a, second_ab, M, se)
