"""Deterministic flows on velocity space: geodesic and dissipative.

For the affine algebra both flows have closed forms (geodesics trace
semicircles v0^2 + v1^2 = rho^2; with linear drag the speed decays as
rho(t) = rho1 e^{-gamma (t - t1)} while the phase advances by
rho1 (1 - e^{-gamma (t-t1)})/gamma). A fixed-step RK4 integrator provides
the general-purpose cross-check for any algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import LieAlgebra, ModelParams, geodesic_field, energy
from .coords import PolarVelocity, sech


class DivergenceError(RuntimeError):
    """A trajectory left the representable range (non-finite state)."""

    def __init__(self, t: float):
        super().__init__(f"non-finite state encountered at t = {t:.6g}")
        self.t = t


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)
    meta: dict

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def geodesic_closed_form(p0: PolarVelocity, t) -> np.ndarray:
    """Geodesic through chart point (rho, theta0, eps) after time t.

    v0 = -rho tanh(theta0 + rho t), v1 = rho eps sech(theta0 + rho t);
    the point stays on the circle of radius rho for all t.
    """
    rho, theta0, eps = p0
    phase = theta0 + rho * np.asarray(t, dtype=float)
    return np.stack([-rho * np.tanh(phase), rho * eps * sech(phase)], axis=-1)


def dissipative_closed_form(p1: PolarVelocity, t1: float, gamma: float, t) -> np.ndarray:
    """Damped trajectory through (rho1, theta1, eps1) at time t1, gamma > 0.

    rho(t) = rho1 e^{-gamma (t-t1)} and the phase saturates at
    theta1 + rho1/gamma as t -> infinity, so the velocities spiral into the
    origin along the semicircle.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive; use geodesic_closed_form for gamma = 0")
    rho1, theta1, eps1 = p1
    dtau = np.asarray(t, dtype=float) - t1
    decay = np.exp(-gamma * dtau)
    phase = theta1 + rho1 * (1.0 - decay) / gamma
    r = rho1 * decay
    return np.stack([-r * np.tanh(phase), r * eps1 * sech(phase)], axis=-1)


def integrate_ode(alg: LieAlgebra, params: ModelParams, gamma: float, v0,
                  t_span, dt: float = 1e-3) -> Trajectory:
    """Fixed-step RK4 for dv/dt = -gamma v + V(v).

    The drag is -gamma v (the Gamma = gamma G^{-1} convention, under which
    the energy of the damped flow obeys dE/dt = -2 gamma E exactly).
    gamma = 0 gives the pure geodesic flow. Raises DivergenceError if the
    state leaves the representable range.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    t0, t1 = float(t_span[0]), float(t_span[1])
    n = int(round((t1 - t0) / dt))
    times = t0 + dt * np.arange(n + 1)

    def rhs(v):
        return -gamma * v + geodesic_field(alg, params, v)

    states = np.empty((n + 1, alg.dim))
    v = np.asarray(v0, dtype=float).copy()
    states[0] = v
    for i in range(n):
        k1 = rhs(v)
        k2 = rhs(v + 0.5 * dt * k1)
        k3 = rhs(v + 0.5 * dt * k2)
        k4 = rhs(v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(v)):
            raise DivergenceError(times[i + 1])
        states[i + 1] = v
    meta = {"algebra": alg.name, "gamma": gamma, "integrator": "rk4", "dt": dt}
    return Trajectory(times, states, meta)


def energy_decay_check(traj: Trajectory, params: ModelParams, gamma: float) -> float:
    """Max relative deviation of E(t) from E(0) e^{-2 gamma (t - t0)}.

    Meaningful for trajectories produced with the isotropic -gamma v drag
    of integrate_ode; for gamma = 0 it measures the integrator's energy
    conservation drift.
    """
    E = np.array([energy(params, v) for v in traj.states])
    E0 = E[0]
    if E0 == 0.0:
        return float(np.max(np.abs(E)))
    predicted = E0 * np.exp(-2.0 * gamma * (traj.times - traj.times[0]))
    return float(np.max(np.abs(E - predicted)) / E0)
