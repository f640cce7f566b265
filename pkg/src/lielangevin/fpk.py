"""Finite-difference solver for the forward Kolmogorov equation of the
hyperboloid Langevin process in the (rho, theta) chart.

Forward operator (density P against drho dtheta):

    L P = d_rho[ D e^{-w} d_rho( e^{w} P ) ]
        + (D/rho^2) d_theta[ cosh^2(theta) d_theta P ]
        - s H'(rho) d_theta P,          w = gamma rho^2 / (2 D)

The radial part uses exponentially fitted (Chang-Cooper) fluxes, so the
discrete operator annihilates the Gaussian e^{-w} exactly, not just to
O(h^2). The adjoint operator is the exact transpose with respect to the
uniform grid inner product, which enforces discrete duality by
construction and makes "adjoint annihilates constants" exact as well.

Boundary conditions: zero flux at both rho ends. In theta, "absorbing"
(the default) pins the boundary rows to zero, so probability drains
through |theta| = theta_max exactly as the underlying diffusion reaches
the chart boundary v1 = 0 in finite time; evolve_to_stationary then
renormalizes every step and converges to the principal quasi-stationary
mode (for k = 0, beta D = gamma this is rho^2 e^{-beta rho^2/2}
sech^2(theta) with escape rate 2 gamma). With "reflecting" theta walls no
mass is lost and the long-time limit is instead the theta-flat truncated
Boltzmann density: the non-normalizability of the Boltzmann solution, seen
dynamically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded


@dataclass
class DensityGrid:
    """Probability density with respect to drho dtheta on a rectangular grid."""

    rho_nodes: np.ndarray
    theta_nodes: np.ndarray
    values: np.ndarray
    total_mass: float = 1.0

    def __post_init__(self):
        self.rho_nodes = np.asarray(self.rho_nodes, float)
        self.theta_nodes = np.asarray(self.theta_nodes, float)
        self.values = np.asarray(self.values, float)
        if np.any(np.diff(self.rho_nodes) <= 0) or np.any(np.diff(self.theta_nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if self.values.shape != (len(self.rho_nodes), len(self.theta_nodes)):
            raise ValueError("values shape does not match the grid")

    def mass(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.theta_nodes, axis=1),
                                  self.rho_nodes))

    def normalize(self, total: float = 1.0) -> "DensityGrid":
        m = self.mass()
        if m <= 0:
            raise ValueError("cannot normalize a massless density")
        return DensityGrid(self.rho_nodes, self.theta_nodes, self.values * (total / m), total)

    def rho_marginal(self) -> np.ndarray:
        return np.trapezoid(self.values, self.theta_nodes, axis=1)

    def theta_marginal(self) -> np.ndarray:
        return np.trapezoid(self.values, self.rho_nodes, axis=0)

    def interpolator(self):
        from scipy.interpolate import RegularGridInterpolator
        return RegularGridInterpolator((self.rho_nodes, self.theta_nodes), self.values,
                                       bounds_error=False, fill_value=0.0)


def default_grid(beta: float, n_rho: int = 400, n_theta: int = 400,
                 rho_min: float = 1e-3, theta_max: float = 8.0):
    """Truncation domain rho in [rho_min, 6/sqrt(beta)], theta in [-theta_max, theta_max]."""
    rho = np.linspace(rho_min, 6.0 / np.sqrt(beta), n_rho)
    theta = np.linspace(-theta_max, theta_max, n_theta)
    return rho, theta


def gaussian_bump(rho_nodes, theta_nodes, rho0=1.0, theta0=0.0,
                  s_rho=0.5, s_theta=1.0) -> DensityGrid:
    """Normalized truncated Gaussian initial condition."""
    P = np.exp(-((rho_nodes[:, None] - rho0) ** 2) / (2 * s_rho**2)
               - ((theta_nodes[None, :] - theta0) ** 2) / (2 * s_theta**2))
    return DensityGrid(rho_nodes, theta_nodes, P).normalize()


class ConvergenceError(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = history


@dataclass
class EvolveReport:
    converged: bool
    t_final: float
    steps: int
    residual_history: list
    mass_loss_rate: float  # lambda estimate from per-step renormalization
    mass_drift_per_step: float


class FPKOperator:
    """Discrete forward/adjoint pair on a fixed rectangular grid.

    Parameters gamma, D, beta, k are the drag, noise strength, inverse
    temperature and Hamiltonian strength (H = -k/rho, so H' = k/rho^2);
    sign_s fixes the sign of the H' advection (+1 is the convention whose
    noise-free limit reproduces dtheta/dt = +H'(rho), validated by the
    static-residual test). theta_bc is "absorbing" or "reflecting".
    """

    def __init__(self, rho_nodes, theta_nodes, gamma: float, D: float,
                 beta: float = 1.0, k: float = 0.0, sign_s: int = 1,
                 theta_bc: str = "absorbing"):
        if D <= 0:
            raise ValueError("D must be positive (the diffusion-free equation is not supported)")
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if theta_bc not in ("absorbing", "reflecting"):
            raise ValueError("theta_bc must be 'absorbing' or 'reflecting'")
        if sign_s not in (1, -1):
            raise ValueError("sign_s must be +1 or -1")
        self.rho = np.asarray(rho_nodes, float)
        self.theta = np.asarray(theta_nodes, float)
        self.gamma, self.D, self.beta, self.k = float(gamma), float(D), float(beta), float(k)
        self.sign_s = sign_s
        self.theta_bc = theta_bc
        self.nr, self.nt = len(self.rho), len(self.theta)
        self.hr = self.rho[1] - self.rho[0]
        self.ht = self.theta[1] - self.theta[0]
        self._build()

    # -- construction ------------------------------------------------------

    def _build(self):
        nr, nt, hr, ht = self.nr, self.nt, self.hr, self.ht
        D, gamma = self.D, self.gamma

        # radial fitted flux: exponent differences keep everything bounded
        rho_h = 0.5 * (self.rho[:-1] + self.rho[1:])
        w = gamma * self.rho**2 / (2 * D)
        wh = gamma * rho_h**2 / (2 * D)
        self._ap = np.exp(w[1:] - wh)   # flux_{i+1/2} coefficient of P_{i+1}
        self._am = np.exp(w[:-1] - wh)  # flux_{i+1/2} coefficient of P_i
        cr = D / hr**2
        up_r = np.zeros(nr); di_r = np.zeros(nr); lo_r = np.zeros(nr)
        up_r[:-1] += cr * self._ap
        di_r[:-1] -= cr * self._am
        di_r[1:] -= cr * self._ap
        lo_r[1:] += cr * self._am
        self._rad = (lo_r, di_r, up_r)

        # theta flux: cosh^2 at half nodes; row scale D/rho^2
        ch = np.cosh(0.5 * (self.theta[:-1] + self.theta[1:])) ** 2
        ct = 1.0 / ht**2
        up_t = np.zeros(nt); di_t = np.zeros(nt); lo_t = np.zeros(nt)
        up_t[:-1] += ct * ch
        di_t[:-1] -= ct * ch
        di_t[1:] -= ct * ch
        lo_t[1:] += ct * ch
        self._ang = (lo_t, di_t, up_t)
        self._dr2 = D / self.rho**2

        self._hprime = self.k / self.rho**2  # H'(rho) for H = -k/rho

    # -- application -------------------------------------------------------
    #
    # Both operators are evaluated in grouped flux form: every term is a
    # difference of neighbouring values times a positive weight. This keeps
    # the action on their exact kernels (e^{-w} for the forward operator,
    # constants for the adjoint) at the rounding level even where the
    # angular coefficient D cosh^2(theta)/rho^2 reaches 1e9; a plain
    # matrix-vector product would lose ten digits to cancellation there.
    # The two forms are algebraic transposes of each other on fields that
    # vanish on the boundary rows.

    def _check_field(self, field):
        field = np.asarray(field, float)
        if field.shape != (self.nr, self.nt):
            raise ValueError(f"field must have shape {(self.nr, self.nt)}")
        return field

    def _theta_flux_term(self, F):
        """d_theta[cosh^2 d_theta F] scaled by D/rho^2 (self-adjoint)."""
        ch = np.cosh(0.5 * (self.theta[:-1] + self.theta[1:])) ** 2
        flux = ch[None, :] * np.diff(F, axis=1)  # at half nodes
        out = np.zeros_like(F)
        out[:, 1:-1] = (flux[:, 1:] - flux[:, :-1]) / self.ht**2
        out[:, 0] = flux[:, 0] / self.ht**2
        out[:, -1] = -flux[:, -1] / self.ht**2
        return self._dr2[:, None] * out

    def apply_forward(self, field) -> np.ndarray:
        P = self._check_field(field)
        cr = self.D / self.hr**2
        flux = cr * (self._ap[:, None] * P[1:] - self._am[:, None] * P[:-1])
        out = np.zeros_like(P)
        out[1:-1] = flux[1:] - flux[:-1]
        out[0] = flux[0]
        out[-1] = -flux[-1]
        out += self._theta_flux_term(P)
        if self.k != 0.0:
            adv = self.sign_s * self._hprime[:, None]
            out[:, 1:-1] -= adv * (P[:, 2:] - P[:, :-2]) / (2 * self.ht)
        if self.theta_bc == "absorbing":
            out[:, 0] = 0.0
            out[:, -1] = 0.0
        return out

    def apply_adjoint(self, field) -> np.ndarray:
        Q = self._check_field(field)
        if self.theta_bc == "absorbing":
            # transpose of pinning the forward boundary rows: Z F0 has
            # adjoint F0^T Z, i.e. the reflecting-form transpose applied to
            # Q with its boundary theta columns zeroed
            Q = Q.copy()
            Q[:, 0] = 0.0
            Q[:, -1] = 0.0
        cr = self.D / self.hr**2
        dQ = np.diff(Q, axis=0)
        out = np.zeros_like(Q)
        out[:-1] += cr * self._am[:, None] * dQ  # e^{w_i - w_{i+1/2}} = am
        out[1:] -= cr * self._ap[:, None] * dQ   # e^{w_i - w_{i-1/2}} = ap
        out += self._theta_flux_term(Q)
        if self.k != 0.0:
            adv = self.sign_s * self._hprime[:, None]
            out[:, 1:-1] += adv * (Q[:, 2:] - Q[:, :-2]) / (2 * self.ht)
        return out

    def interior_mask(self) -> np.ndarray:
        m = np.zeros((self.nr, self.nt), dtype=bool)
        m[1:-1, 1:-1] = True
        return m

    def static_residual(self, P) -> float:
        """||L P||_2 over interior nodes, normalized by ||P||_2."""
        P = self._check_field(getattr(P, "values", P))
        r = self.apply_forward(P)
        m = self.interior_mask()
        return float(np.linalg.norm(r[m]) / np.linalg.norm(P[m]))

    # -- time stepping -----------------------------------------------------

    def _prepare_stepping(self, dt):
        nr, nt = self.nr, self.nt
        lo_r, di_r, up_r = self._rad
        # radial CN matrix, shared by all theta columns
        ab = np.zeros((3, nr))
        ab[0, 1:] = -dt / 2 * up_r[:-1]
        ab[1, :] = 1 - dt / 2 * di_r
        ab[2, :-1] = -dt / 2 * lo_r[1:]
        # theta CN matrices, one tridiagonal system per rho row
        lo_t, di_t, up_t = self._ang
        sc = self._dr2[:, None]
        Lo = sc * lo_t[None, :]
        Di = sc * di_t[None, :]
        Up = sc * up_t[None, :]
        if self.theta_bc == "absorbing":
            Lo[:, 0] = Di[:, 0] = Up[:, 0] = 0.0
            Lo[:, -1] = Di[:, -1] = Up[:, -1] = 0.0
        A_lo, A_di, A_up = -dt / 2 * Lo, 1 - dt / 2 * Di, -dt / 2 * Up
        # prefactored Thomas sweeps, vectorized over rho rows
        cp = np.zeros((nr, nt))
        den = np.zeros((nr, nt))
        den[:, 0] = A_di[:, 0]
        cp[:, 0] = A_up[:, 0] / den[:, 0]
        for j in range(1, nt):
            den[:, j] = A_di[:, j] - A_lo[:, j] * cp[:, j - 1]
            if j < nt - 1:
                cp[:, j] = A_up[:, j] / den[:, j]
        return ab, (Lo, Di, Up), (A_lo, cp, den)

    def _theta_explicit(self, P, coeffs):
        Lo, Di, Up = coeffs
        out = P * Di
        out[:, 1:] += P[:, :-1] * Lo[:, 1:]
        out[:, :-1] += P[:, 1:] * Up[:, :-1]
        return out

    def _theta_solve(self, rhs, thomas):
        A_lo, cp, den = thomas
        nt = self.nt
        d = np.empty_like(rhs)
        d[:, 0] = rhs[:, 0] / den[:, 0]
        for j in range(1, nt):
            d[:, j] = (rhs[:, j] - A_lo[:, j] * d[:, j - 1]) / den[:, j]
        X = np.empty_like(rhs)
        X[:, -1] = d[:, -1]
        for j in range(nt - 2, -1, -1):
            X[:, j] = d[:, j] - cp[:, j] * X[:, j + 1]
        return X

    def _advect_upwind(self, P, dt):
        # explicit first-order upwind for the -s H'(rho) dP/dtheta term
        v = self.sign_s * self._hprime  # theta transport velocity, per rho row
        if not np.any(v):
            return P
        out = P.copy()
        dPdt = np.zeros_like(P)
        fwd = np.zeros_like(P)
        fwd[:, 1:] = (P[:, 1:] - P[:, :-1]) / self.ht
        bwd = np.zeros_like(P)
        bwd[:, :-1] = (P[:, 1:] - P[:, :-1]) / self.ht
        vp = np.maximum(v, 0.0)[:, None]
        vm = np.minimum(v, 0.0)[:, None]
        dPdt = -(vp * fwd + vm * bwd)
        out += dt * dPdt
        return out

    def evolve_to_stationary(self, P0: DensityGrid, t_max: float = 60.0,
                             dt: float = 2e-3, tol: float = 1e-8,
                             check_every: int = 100) -> tuple:
        """March to the (renormalized) stationary state by operator splitting.

        Crank-Nicolson on the radial and angular diffusion operators
        (unconditionally stable; the fitted radial operator contains the
        drift), explicit upwind for the k-advection, renormalization and
        nonnegativity projection every step. Stops when the L1 change per
        unit time of the normalized density falls below tol. Returns
        (DensityGrid, EvolveReport); raises ConvergenceError at t_max.
        """
        P = self._check_field(P0.values).copy()
        if np.any(P < 0):
            raise ValueError("initial density must be nonnegative")
        tw = np.trapezoid  # mass via trapezoid weights
        m0 = tw(tw(P, self.theta, axis=1), self.rho)
        if m0 <= 0:
            raise ValueError("initial density must carry mass")
        P /= m0
        ab, coeffs, thomas = self._prepare_stepping(dt)
        history = []
        prev = P.copy()
        loss = []
        n_steps = int(round(t_max / dt))
        converged = False
        step = 0
        for step in range(1, n_steps + 1):
            rhs = P + dt / 2 * self._theta_explicit(P, coeffs)
            if self.theta_bc == "absorbing":
                rhs[:, 0] = 0.0
                rhs[:, -1] = 0.0
            P = self._theta_solve(rhs, thomas)
            lo_r, di_r, up_r = self._rad
            rhs = P + dt / 2 * (np.vstack([P[1:], np.zeros(self.nt)]) * up_r[:, None]
                                + P * di_r[:, None]
                                + np.vstack([np.zeros(self.nt), P[:-1]]) * lo_r[:, None])
            P = solve_banded((1, 1), ab, rhs)
            if self.k != 0.0:
                P = self._advect_upwind(P, dt)
            np.maximum(P, 0.0, out=P)
            m = tw(tw(P, self.theta, axis=1), self.rho)
            loss.append(-np.log(max(m, 1e-300)) / dt)
            P /= m
            if step % check_every == 0:
                resid = float(np.abs(P - prev).sum() * self.hr * self.ht / (check_every * dt))
                history.append((step * dt, resid))
                prev = P.copy()
                if resid < tol:
                    converged = True
                    break
        lam = float(np.mean(loss[-min(len(loss), 500):]))
        drift = float(np.mean(np.abs(np.diff(np.exp(-dt * np.asarray(loss[-50:]))))))
        report = EvolveReport(converged, step * dt, step, history, lam, drift)
        if not converged:
            raise ConvergenceError(
                f"no stationary state within t_max = {t_max}", history)
        grid = DensityGrid(self.rho, self.theta, P).normalize()
        return grid, report


def apply_forward(op: FPKOperator, P) -> np.ndarray:
    return op.apply_forward(getattr(P, "values", P))


def apply_adjoint(op: FPKOperator, Q) -> np.ndarray:
    return op.apply_adjoint(getattr(Q, "values", Q))


def static_residual(op: FPKOperator, P) -> float:
    return op.static_residual(P)


def evolve_to_stationary(op: FPKOperator, P0: DensityGrid, t_max: float = 60.0,
                         dt: float = 2e-3, tol: float = 1e-8):
    return op.evolve_to_stationary(P0, t_max=t_max, dt=dt, tol=tol)
