"""Finite-dimensional Lie algebras with structure constants, model tensors,
Lie-Poisson brackets and the geodesic (Euler) vector field on velocity space.

Velocity vectors are plain 1-D numpy arrays of length ``alg.dim``; the basis
is fixed once the structure constants f[a, b, c] = f_ab^c are given.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

JACOBI_TOL = 1e-12
SYMMETRY_TOL = 1e-14
UNIMODULAR_TOL = 1e-12


class HamiltonianKind(enum.Enum):
    QUADRATIC = "quadratic"
    INVERSE_RHO = "inverse_rho"


class ChartSingularityError(ValueError):
    """Raised when an operation is evaluated on a coordinate singularity."""


@dataclass(frozen=True)
class LieAlgebra:
    """A Lie algebra given by its structure constants.

    f[a, b, c] holds f_ab^c, the coefficient of e_c in [e_a, e_b].
    Antisymmetry in (a, b) and the Jacobi identity are checked at
    construction; both must hold to 1e-12. Instances are immutable and
    safe to share between workers.
    """

    dim: int
    f: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if f.shape != (self.dim, self.dim, self.dim):
            raise ValueError(f"structure constants must have shape {(self.dim,)*3}, got {f.shape}")
        object.__setattr__(self, "f", f)
        anti = np.max(np.abs(f + np.swapaxes(f, 0, 1)))
        if anti > JACOBI_TOL:
            raise ValueError(f"structure constants not antisymmetric: max violation {anti:.3e}")
        jac = np.max(np.abs(self._jacobi_residual()))
        if jac > JACOBI_TOL:
            raise ValueError(f"Jacobi identity violated: max residual {jac:.3e}")

    def _jacobi_residual(self) -> np.ndarray:
        f = self.f
        term = np.einsum("abe,ecd->abcd", f, f)
        return term + np.transpose(term, (1, 2, 0, 3)) + np.transpose(term, (2, 0, 1, 3))


@dataclass(frozen=True)
class ModelParams:
    """Energy, dissipation and fluctuation tensors plus scalar couplings.

    G is the inverse-inertia tensor defining E = (1/2) v^T G v. Gamma and
    Dtensor are the dissipation and fluctuation tensors; beta is the inverse
    temperature and k the strength of the H(rho) = -k/rho Hamiltonian.
    """

    G: np.ndarray
    Gamma: np.ndarray = None
    Dtensor: np.ndarray = None
    beta: float = 1.0
    k: float = 0.0
    hamiltonian_kind: HamiltonianKind = HamiltonianKind.QUADRATIC
    einstein_relation: bool = False

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        n = G.shape[0]
        Gamma = np.eye(n) if self.Gamma is None else np.atleast_2d(np.asarray(self.Gamma, float))
        Dt = np.eye(n) if self.Dtensor is None else np.atleast_2d(np.asarray(self.Dtensor, float))
        for nm, M in (("G", G), ("Gamma", Gamma), ("Dtensor", Dt)):
            if M.shape != (n, n):
                raise ValueError(f"{nm} must be {n}x{n}")
            if np.max(np.abs(M - M.T)) > SYMMETRY_TOL:
                raise ValueError(f"{nm} not symmetric within {SYMMETRY_TOL}")
        if np.min(np.linalg.eigvalsh(G)) <= 0:
            raise ValueError("G must be positive definite")
        if np.min(np.linalg.eigvalsh(Gamma)) < -SYMMETRY_TOL:
            raise ValueError("Gamma must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(Dt)) < -SYMMETRY_TOL:
            raise ValueError("Dtensor must be positive semidefinite")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.einstein_relation and np.max(np.abs(self.beta * Dt - Gamma)) > 1e-12:
            raise ValueError("Einstein relation beta*D = Gamma violated")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "Gamma", Gamma)
        object.__setattr__(self, "Dtensor", Dt)

    @property
    def dim(self) -> int:
        return self.G.shape[0]


def abelian(n: int) -> LieAlgebra:
    """Abelian algebra in n dimensions (all brackets vanish)."""
    return LieAlgebra(n, np.zeros((n, n, n)), name=f"abelian({n})")


def affine2() -> LieAlgebra:
    """The affine algebra of the line, {v0, v1} = v1.

    The only non-abelian two-dimensional Lie algebra, and the simplest
    non-unimodular one; its velocity space carries the hyperboloid geometry.
    """
    f = np.zeros((2, 2, 2))
    f[0, 1, 1] = 1.0
    f[1, 0, 1] = -1.0
    return LieAlgebra(2, f, name="affine")


def so3() -> LieAlgebra:
    """so(3) with f_ab^c = epsilon_abc (the rigid body algebra)."""
    f = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        f[a, b, c] = 1.0
        f[b, a, c] = -1.0
    return LieAlgebra(3, f, name="so3")


def direct_sum(a: LieAlgebra, b: LieAlgebra) -> LieAlgebra:
    """Direct sum a (+) b with block-diagonal structure constants."""
    n = a.dim + b.dim
    f = np.zeros((n, n, n))
    f[: a.dim, : a.dim, : a.dim] = a.f
    f[a.dim :, a.dim :, a.dim :] = b.f
    return LieAlgebra(n, f, name=f"{a.name}+{b.name}")


def from_entries(dim: int, entries) -> LieAlgebra:
    """Build an algebra from sparse entries [a, b, c, value] with a < b.

    The antisymmetric counterpart f[b, a, c] = -value is filled in
    automatically; the Jacobi identity is validated at construction.
    """
    f = np.zeros((dim, dim, dim))
    for a, b, c, val in entries:
        a, b, c = int(a), int(b), int(c)
        f[a, b, c] = float(val)
        f[b, a, c] = -float(val)
    return LieAlgebra(dim, f, name="custom")


BUILTIN_ALGEBRAS = {
    "affine": affine2,
    "so3": so3,
    "abelian2": lambda: abelian(2),
    "abelian3": lambda: abelian(3),
}


def trace_vector(alg: LieAlgebra) -> np.ndarray:
    """Trace of the adjoint maps, T[b] = sum_a f[a, b, a].

    T = 0 characterises unimodular algebras; for the affine algebra
    T = (-1, 0).
    """
    return np.einsum("aba->b", alg.f)


def is_unimodular(alg: LieAlgebra) -> bool:
    return bool(np.max(np.abs(trace_vector(alg))) < UNIMODULAR_TOL)


def poisson_bracket(alg: LieAlgebra, grad_f, grad_g, v) -> float:
    """Lie-Poisson bracket {F, G}(v) = f_ab^c v_c (dF)_a (dG)_b."""
    grad_f = np.asarray(grad_f, float)
    grad_g = np.asarray(grad_g, float)
    v = np.asarray(v, float)
    if grad_f.shape != (alg.dim,) or grad_g.shape != (alg.dim,) or v.shape != (alg.dim,):
        raise ValueError(f"expected vectors of length {alg.dim}")
    return float(np.einsum("abc,c,a,b->", alg.f, v, grad_f, grad_g))


def energy(params: ModelParams, v) -> float:
    """Kinetic energy E = (1/2) v^T G v."""
    v = np.asarray(v, float)
    return 0.5 * float(v @ params.G @ v)


def geodesic_field(alg: LieAlgebra, params: ModelParams, v) -> np.ndarray:
    """Drift of the geodesic flow, V_a = {H, v_a} = -f_ab^c G^bd v_c v_d.

    For the affine algebra with G = I this is (-v1^2, v0 v1). With the
    inverse-rho Hamiltonian H = -k/rho the quadratic field is rescaled by
    H'(rho)/rho; rho = 0 is then a genuine singularity.
    """
    v = np.asarray(v, float)
    V = -np.einsum("abc,bd,c,d->a", alg.f, params.G, v, v)
    if params.hamiltonian_kind is HamiltonianKind.INVERSE_RHO:
        rho2 = float(v @ params.G @ v)
        if rho2 <= 0.0:
            raise ChartSingularityError("inverse-rho Hamiltonian is singular at rho = 0")
        rho = np.sqrt(rho2)
        # H'(rho)/rho with H = -k/rho, against the E-derivative scale E'(rho)/rho = 1
        V *= params.k / rho2 / rho
    return V


def divergence_of_field(alg: LieAlgebra, params: ModelParams, v) -> float:
    """Divergence of the geodesic field, -T_b (G v)_b for the quadratic kind.

    Vanishes identically iff the algebra is unimodular; this is why the flat
    measure dv fails to be invariant in the non-unimodular case.
    """
    if params.hamiltonian_kind is not HamiltonianKind.QUADRATIC:
        raise ValueError("divergence_of_field is defined for the quadratic Hamiltonian")
    v = np.asarray(v, float)
    return float(-trace_vector(alg) @ (params.G @ v))
