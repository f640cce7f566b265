"""Special functions and the separated eigenproblems for the static
density on the hyperboloid.

The angular factor solves

    d/dtheta[ cosh^2(theta) dQ1/dtheta ] + a dQ1/dtheta + beta1 Q1 = 0,

which under u = tanh(theta) becomes (1 - u^2) Q1'' + a (1 - u^2) Q1' +
beta1 Q1 = 0 on u in (-1, 1). (Note the coefficient of Q1' is a, not 2a;
the substitution Q1 = e^{-a u} sqrt(1 - u^2) phi(u) then leads to the
prolate angular spheroidal equation.) The integrable branch is the
Dirichlet spectrum of this equation; at a = 0 it is beta1 = n(n+1) with
ground eigenfunction 1 - u^2 = sech^2(theta). The constant solution is the
separate beta1 = 0 branch, exact for every a but not integrable in theta.

The radial factor solves Q2'' - beta rho Q2' - (beta1/rho^2) Q2 = 0, a
confluent hypergeometric equation: with s = (1 + sqrt(1 + 4 beta1))/2 and
z = beta rho^2 / 2 the two branches are rho^s M(s/2, s + 1/2, z) (regular
at 0, grows like e^z at infinity) and rho^s U(s/2, s + 1/2, z) (bounded at
infinity, singular like rho^{1-s} at 0). The erf closed form offered for
beta1 = 2 is retained as the PAPER_ERF branch so its residual can be
measured; it does not satisfy the equation (residual ~ -1.37 at beta = 1,
rho = 1), so the decaying branch is selected by TRICOMI_U / NUMERIC_BVP
instead and integrability is measured, not assumed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special as _sp
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal


def erf(x):
    """Error function (delegates to scipy.special; |error| < 1e-15)."""
    return _sp.erf(x)


def kummer_M(a: float, b: float, z) -> float:
    """Confluent hypergeometric M(a; b; z) = 1F1 by power series.

    Terms follow the ratio (a+n) z / ((b+n)(n+1)); summation stops once two
    consecutive terms are below eps * |partial sum|. Intended for the
    moderate range z in [0, 50] used by the radial profiles. Accepts
    scalars or arrays.
    """
    if b <= 0 and b == int(b):
        raise ValueError(f"1F1 has a pole at b = {b}")
    if np.ndim(z) > 0:
        return np.array([kummer_M(a, b, float(zz)) for zz in np.ravel(z)]).reshape(np.shape(z))
    total = 1.0
    term = 1.0
    small = 0
    for n in range(1000):
        term *= (a + n) * z / ((b + n) * (n + 1))
        total += term
        if abs(term) <= 1e-17 * max(abs(total), 1e-300):
            small += 1
            if small >= 2:
                break
        else:
            small = 0
    return total


def kummer_M_deriv(a: float, b: float, z: float, order: int = 1) -> float:
    """d^n/dz^n M(a; b; z) = ((a)_n / (b)_n) M(a+n; b+n; z)."""
    coeff = 1.0
    for j in range(order):
        coeff *= (a + j) / (b + j)
    return coeff * kummer_M(a + order, b + order, z)


def tricomi_U(a: float, b: float, z):
    """Tricomi U(a; b; z), the branch decaying like z^{-a} at infinity.

    Backed by scipy.special.hyperu; the M-combination loses too many digits
    to cancellation in the intermediate range z ~ 10..30 that the radial
    profiles sample. Guards z > 0. Accepts scalars or arrays.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr <= 0):
        raise ValueError("tricomi_U requires z > 0")
    with np.errstate(over="ignore"):
        val = _sp.hyperu(a, b, z_arr)
    if not np.all(np.isfinite(val)):
        raise OverflowError(f"U({a}, {b}, ...) overflowed")
    return float(val) if np.ndim(z) == 0 else val


def tricomi_U_deriv(a: float, b: float, z: float, order: int = 1) -> float:
    """d^n/dz^n U(a; b; z) = (-1)^n (a)_n U(a+n; b+n; z)."""
    coeff = 1.0
    for j in range(order):
        coeff *= -(a + j)
    return coeff * tricomi_U(a + order, b + order, z)


def wronskian_M_U(a: float, b: float, z: float) -> float:
    """Exact Wronskian M U' - M' U = -Gamma(b)/Gamma(a) z^{-b} e^z."""
    return -math.gamma(b) / math.gamma(a) * z ** (-b) * math.exp(z)


# ---------------------------------------------------------------------------
# angular eigenproblem
# ---------------------------------------------------------------------------

@dataclass
class AngularEigenpair:
    """One eigenpair of the angular equation at drift parameter a.

    u_nodes/values sample the eigenfunction on the interior of the u grid;
    evaluation at theta interpolates in u = tanh(theta). grid_residual is
    the discrete-operator residual ||(L + beta1) x||_inf on the solve grid.
    """

    a: float
    beta1: float
    u_nodes: np.ndarray
    values: np.ndarray
    integrable: bool
    n_grid: int
    grid_residual: float

    def __call__(self, theta):
        u = np.tanh(np.asarray(theta, dtype=float))
        return np.interp(u, self.u_nodes, self.values,
                         left=0.0 if self.integrable else self.values[0],
                         right=0.0 if self.integrable else self.values[-1])

    def on_u(self, u):
        return np.interp(u, self.u_nodes, self.values)


def _angular_matrix(a: float, n_grid: int):
    """Interior FD matrix of L = (1-u^2)(d^2/du^2 + a d/du), Dirichlet rows."""
    u = np.linspace(-1.0, 1.0, n_grid + 1)
    h = u[1] - u[0]
    ui = u[1:-1]
    w = 1.0 - ui * ui
    lo = w * (1.0 / h**2 - a / (2.0 * h))
    di = w * (-2.0 / h**2)
    up = w * (1.0 / h**2 + a / (2.0 * h))
    return ui, lo, di, up


def _angular_eigs_sym(a: float, n_grid: int, n_eigs: int):
    """Solve L x = -beta1 x via diagonal symmetrization to a real tridiagonal.

    Off-diagonal products up_i * lo_{i+1} are positive for |a| h < 2, so the
    matrix is similar to a symmetric tridiagonal one; eigenvalues are real
    and eigh_tridiagonal is O(n^2). Eigenvectors are recovered by undoing
    the diagonal scaling (accumulated in log space to avoid overflow).
    """
    ui, lo, di, up = _angular_matrix(a, n_grid)
    m = len(di)
    e = np.sqrt(up[:-1] * lo[1:])
    k = min(n_eigs, m)
    vals, vecs = eigh_tridiagonal(di, e, select="i", select_range=(m - k, m - 1))
    beta1s = -vals[::-1]
    vecs = vecs[:, ::-1]
    # diagonal similarity: x_orig = diag(exp(logd)) @ x_sym with
    # (d_{i+1}/d_i)^2 = lo_{i+1}/up_i
    ratio = 0.5 * (np.log(lo[1:]) - np.log(up[:-1]))
    logd = np.concatenate([[0.0], np.cumsum(ratio)])
    logd -= logd.max()
    x = vecs * np.exp(logd)[:, None]

    def apply_L(v):
        Lv = di * v
        Lv[:-1] += up[:-1] * v[1:]
        Lv[1:] += lo[1:] * v[:-1]
        return Lv

    # one inverse-iteration step on the original matrix polishes the
    # vectors, which lose digits in the exponential unscaling for a != 0
    from scipy.linalg import solve_banded as _solve_banded
    xs, dense_resid = [], []
    for j in range(k):
        v = x[:, j]
        band = np.zeros((3, m))
        band[0, 1:] = up[:-1]
        band[1, :] = di + beta1s[j] * (1.0 + 1e-13)
        band[2, :-1] = lo[1:]
        try:
            v = _solve_banded((1, 1), band, v)
        except np.linalg.LinAlgError:
            pass
        v = v / v[np.argmax(np.abs(v))]
        xs.append(v)
        dense_resid.append(float(np.max(np.abs(apply_L(v) + beta1s[j] * v))))
    return ui, beta1s, xs, dense_resid


def solve_angular_eigen(a: float, n_grid: int = 800, n_eigs: int = 6):
    """Lowest eigenpairs of the angular equation at drift parameter a.

    Returns the exact constant branch (beta1 = 0, not theta-integrable)
    followed by the lowest Dirichlet eigenpairs, sorted by beta1. Spurious
    discrete eigenvalues are filtered by re-solving on a grid twice as fine
    and keeping values that agree to 0.1% or 1e-6 absolute.
    """
    if n_grid < 200:
        raise ValueError("n_grid must be at least 200")
    ui_c, b_coarse, _, _ = _angular_eigs_sym(a, n_grid, n_eigs + 2)
    ui, b_fine, vecs, resid = _angular_eigs_sym(a, 2 * n_grid, n_eigs + 2)
    full_u = np.concatenate([[-1.0], ui, [1.0]])
    pairs = [AngularEigenpair(a, 0.0, full_u, np.ones_like(full_u), False,
                              2 * n_grid, 0.0)]
    for j, b in enumerate(b_fine):
        gap = np.min(np.abs(b_coarse - b))
        if gap > max(1e-6, 1e-3 * abs(b)):
            continue  # did not converge under refinement
        full_v = np.concatenate([[0.0], vecs[j], [0.0]])  # Dirichlet endpoints
        pairs.append(AngularEigenpair(a, float(b), full_u, full_v, True,
                                      2 * n_grid, resid[j]))
        if len(pairs) >= n_eigs + 1:
            break
    return pairs


def angular_ode_residual(a: float, beta1: float, Q1, theta, d1=None, d2=None) -> float:
    """Pointwise residual cosh^2 Q1'' + (sinh 2theta + a) Q1' + beta1 Q1.

    Uses the supplied analytic derivatives when given (or attributes
    .deriv1/.deriv2 on Q1), otherwise 4th-order central differences with
    step 1e-3.
    """
    th = float(theta)
    d1 = d1 or getattr(Q1, "deriv1", None)
    d2 = d2 or getattr(Q1, "deriv2", None)
    if d1 is not None and d2 is not None:
        q, q1, q2 = float(Q1(th)), float(d1(th)), float(d2(th))
    else:
        h = 1e-3
        pts = np.array([Q1(th + j * h) for j in (-2, -1, 0, 1, 2)], dtype=float)
        q = pts[2]
        q1 = (-pts[4] + 8 * pts[3] - 8 * pts[1] + pts[0]) / (12 * h)
        q2 = (-pts[4] + 16 * pts[3] - 30 * pts[2] + 16 * pts[1] - pts[0]) / (12 * h**2)
    ch2 = math.cosh(th) ** 2
    return ch2 * q2 + (math.sinh(2 * th) + a) * q1 + beta1 * q


# ---------------------------------------------------------------------------
# radial equation
# ---------------------------------------------------------------------------

class RadialBranch(enum.Enum):
    PAPER_ERF = "paper_erf"
    KUMMER_M = "kummer_m"
    TRICOMI_U = "tricomi_u"
    NUMERIC_BVP = "numeric_bvp"


def s_plus(beta1: float) -> float:
    """Regular indicial exponent at rho = 0: s = (1 + sqrt(1 + 4 beta1))/2."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * beta1))


@dataclass
class RadialSolution:
    """An evaluable radial profile Q2(rho) with optional analytic derivatives."""

    branch: RadialBranch
    beta: float
    beta1: float
    func: Callable
    deriv1: Optional[Callable] = None
    deriv2: Optional[Callable] = None
    meta: dict = field(default_factory=dict)

    def __call__(self, rho):
        return self.func(rho)


def _erf_branch(beta: float, beta1: float) -> RadialSolution:
    sb = math.sqrt(beta)

    def g(r):
        return np.exp(-beta * r**2 / 4.0) * _sp.erf(sb * r / 2.0)

    def g1(r):
        return -(beta * r / 2.0) * g(r) + (sb / math.sqrt(math.pi)) * np.exp(-beta * r**2 / 2.0)

    def g2(r):
        return (-(beta / 2.0) * g(r) - (beta * r / 2.0) * g1(r)
                - (sb / math.sqrt(math.pi)) * beta * r * np.exp(-beta * r**2 / 2.0))

    def q(r):
        return 1.0 - g(r) / (sb * r)

    def q1(r):
        return g(r) / (sb * r**2) - g1(r) / (sb * r)

    def q2(r):
        return -2.0 * g(r) / (sb * r**3) + 2.0 * g1(r) / (sb * r**2) - g2(r) / (sb * r)

    return RadialSolution(RadialBranch.PAPER_ERF, beta, beta1, q, q1, q2)


def _hypergeom_branch(beta: float, beta1: float, kind: RadialBranch) -> RadialSolution:
    s = s_plus(beta1)
    aK, bK = s / 2.0, s + 0.5
    if kind is RadialBranch.KUMMER_M:
        f0 = lambda z: kummer_M(aK, bK, z)
        f1 = lambda z: kummer_M_deriv(aK, bK, z, 1)
        f2 = lambda z: kummer_M_deriv(aK, bK, z, 2)
    else:
        f0 = lambda z: tricomi_U(aK, bK, z)
        f1 = lambda z: tricomi_U_deriv(aK, bK, z, 1)
        f2 = lambda z: tricomi_U_deriv(aK, bK, z, 2)

    def q(r):
        return r**s * f0(beta * r**2 / 2.0)

    def q1(r):
        z = beta * r**2 / 2.0
        return s * r ** (s - 1) * f0(z) + r**s * f1(z) * beta * r

    def q2(r):
        z = beta * r**2 / 2.0
        return (s * (s - 1) * r ** (s - 2) * f0(z)
                + 2.0 * s * r ** (s - 1) * f1(z) * beta * r
                + r**s * (f2(z) * (beta * r) ** 2 + f1(z) * beta))

    return RadialSolution(kind, beta, beta1, q, q1, q2,
                          meta={"s_plus": s, "a": aK, "b": bK})


def _bvp_branch(beta: float, beta1: float) -> RadialSolution:
    """Decaying solution by inward integration from rho_max = 8/sqrt(beta).

    Start with Q = 1 and the asymptotic slope Q' = -beta1 / (beta rho^3) of
    the bounded branch Q ~ 1 + beta1/(2 beta rho^2). Inward integration is
    stable: the contaminating e^{beta rho^2/2} branch decays toward small
    rho.
    """
    rmax = 8.0 / math.sqrt(beta)
    rmin = 0.02 / math.sqrt(beta)

    def rhs(r, y):
        return [y[1], beta * r * y[1] + beta1 / r**2 * y[0]]

    sol = solve_ivp(rhs, [rmax, rmin], [1.0, -beta1 / (beta * rmax**3)],
                    rtol=1e-11, atol=1e-13, dense_output=True, method="RK45")
    if not sol.success:
        raise RuntimeError(f"inward radial integration failed: {sol.message}")

    def q(r):
        r = np.asarray(r, dtype=float)
        return sol.sol(np.clip(r, rmin, rmax))[0]

    def q1(r):
        r = np.asarray(r, dtype=float)
        return sol.sol(np.clip(r, rmin, rmax))[1]

    return RadialSolution(RadialBranch.NUMERIC_BVP, beta, beta1, q, q1, None,
                          meta={"rho_max": rmax, "rho_min": rmin})


def radial_solution(beta: float, beta1: float, branch: RadialBranch) -> RadialSolution:
    """Radial profile Q2 for Q2'' - beta rho Q2' - (beta1/rho^2) Q2 = 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if branch is RadialBranch.PAPER_ERF:
        return _erf_branch(beta, beta1)
    if branch in (RadialBranch.KUMMER_M, RadialBranch.TRICOMI_U):
        return _hypergeom_branch(beta, beta1, branch)
    if branch is RadialBranch.NUMERIC_BVP:
        return _bvp_branch(beta, beta1)
    raise ValueError(f"unknown branch {branch!r}")


def radial_residual(beta: float, beta1: float, Q2, rho: float) -> float:
    """Pointwise residual Q2'' - beta rho Q2' - (beta1/rho^2) Q2.

    Analytic derivatives are used if Q2 carries them (RadialSolution with
    deriv1/deriv2); otherwise 4th-order central differences with step
    h = 1e-4 max(1, rho).
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    d1 = getattr(Q2, "deriv1", None)
    d2 = getattr(Q2, "deriv2", None)
    if d1 is not None and d2 is not None:
        q, q1, q2 = float(Q2(rho)), float(d1(rho)), float(d2(rho))
    else:
        h = 1e-4 * max(1.0, rho)
        pts = np.array([Q2(rho + j * h) for j in (-2, -1, 0, 1, 2)], dtype=float)
        q = pts[2]
        q1 = (-pts[4] + 8 * pts[3] - 8 * pts[1] + pts[0]) / (12 * h)
        q2 = (-pts[4] + 16 * pts[3] - 30 * pts[2] + 16 * pts[1] - pts[0]) / (12 * h**2)
    return q2 - beta * rho * q1 - beta1 / rho**2 * q
