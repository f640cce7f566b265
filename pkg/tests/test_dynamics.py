import numpy as np
import pytest

from lielangevin.algebra import ModelParams, affine2, so3, energy
from lielangevin.coords import PolarVelocity, to_cartesian
from lielangevin.dynamics import (DivergenceError, Trajectory, dissipative_closed_form,
                                  energy_decay_check, geodesic_closed_form, integrate_ode)

AFFINE = affine2()
EYE2 = ModelParams(G=np.eye(2))


def test_geodesic_closed_form_points():
    assert np.allclose(geodesic_closed_form(PolarVelocity(1.0, 0.0, 1), 0.0), [0.0, 1.0])
    # long-time limit approaches (-rho, 0)
    v = geodesic_closed_form(PolarVelocity(1.0, 0.0, 1), 50.0)
    assert v[0] == pytest.approx(-1.0, abs=1e-14)
    assert v[1] == pytest.approx(0.0, abs=1e-14)
    v = geodesic_closed_form(PolarVelocity(2.0, 0.0, 1), 0.5)
    assert np.allclose(v, [-2 * np.tanh(1.0), 2 / np.cosh(1.0)], rtol=1e-14)


def test_geodesic_stays_on_circle():
    ts = np.linspace(0, 10, 101)
    for rho in (0.5, 1.0, 3.0):
        pts = geodesic_closed_form(PolarVelocity(rho, -0.7, -1), ts)
        assert np.allclose(pts[:, 0] ** 2 + pts[:, 1] ** 2, rho**2, rtol=1e-12)


def test_dissipative_closed_form_points():
    p1 = PolarVelocity(1.3, 0.4, -1)
    assert np.allclose(dissipative_closed_form(p1, 2.0, 0.7, 2.0), to_cartesian(p1))
    v = dissipative_closed_form(PolarVelocity(1.0, 0.0, 1), 0.0, 1.0, 1.0)
    r = np.exp(-1.0)
    phase = 1.0 - np.exp(-1.0)
    assert np.allclose(v, [-r * np.tanh(phase), r / np.cosh(phase)], rtol=1e-14)
    # four-digit reference values (-0.2060, 0.3048) hold to rounding
    assert v[0] == pytest.approx(-0.2060, abs=3e-4)
    assert v[1] == pytest.approx(0.3048, abs=3e-4)
    # velocities tend to zero as t -> infinity
    v = dissipative_closed_form(PolarVelocity(2.0, 0.0, 1), 0.0, 1.0, 60.0)
    assert np.hypot(*v) < 1e-25


def test_dissipative_requires_positive_gamma():
    with pytest.raises(ValueError):
        dissipative_closed_form(PolarVelocity(1.0, 0.0, 1), 0.0, 0.0, 1.0)


def test_rk4_matches_geodesic_closed_form():
    p0 = PolarVelocity(1.0, 0.0, 1)
    traj = integrate_ode(AFFINE, EYE2, 0.0, to_cartesian(p0), (0.0, 5.0), dt=1e-3)
    exact = geodesic_closed_form(p0, traj.times)
    assert np.max(np.abs(traj.states - exact)) < 1e-9


def test_rk4_matches_dissipative_closed_form():
    p0 = PolarVelocity(1.0, 0.0, 1)
    traj = integrate_ode(AFFINE, EYE2, 1.0, to_cartesian(p0), (0.0, 5.0), dt=1e-3)
    exact = dissipative_closed_form(p0, 0.0, 1.0, traj.times)
    assert np.max(np.abs(traj.states - exact)) < 1e-8


def test_rk4_fourth_order_convergence():
    p0 = PolarVelocity(1.5, 0.2, 1)
    errs = []
    for dt in (4e-3, 2e-3):
        traj = integrate_ode(AFFINE, EYE2, 0.5, to_cartesian(p0), (0.0, 2.0), dt=dt)
        exact = dissipative_closed_form(p0, 0.0, 0.5, traj.times)
        errs.append(np.max(np.abs(traj.states - exact)))
    factor = errs[0] / errs[1]
    assert 8.0 <= factor <= 32.0


def test_so3_isotropic_is_constant():
    params = ModelParams(G=np.eye(3))
    v0 = np.array([0.4, -0.2, 0.9])
    traj = integrate_ode(so3(), params, 0.0, v0, (0.0, 2.0), dt=1e-3)
    assert np.max(np.abs(traj.states - v0)) < 1e-12


def test_energy_decay_law():
    p0 = PolarVelocity(2.0, 0.0, 1)
    traj = integrate_ode(AFFINE, EYE2, 1.0, to_cartesian(p0), (0.0, 5.0), dt=1e-3)
    assert energy_decay_check(traj, EYE2, 1.0) < 1e-6
    # point check of the law itself: E(1) = E(0) e^{-2 gamma}
    E0 = energy(EYE2, traj.states[0])
    i = np.searchsorted(traj.times, 1.0)
    assert energy(EYE2, traj.states[i]) == pytest.approx(E0 * np.exp(-2.0), rel=1e-6)
    assert E0 * np.exp(-2 * 0.5 * 1.0) == pytest.approx(2 * np.exp(-1.0))  # gamma=0.5 example


def test_energy_conservation_geodesic():
    traj = integrate_ode(AFFINE, EYE2, 0.0, [0.3, 1.2], (0.0, 5.0), dt=1e-3)
    assert energy_decay_check(traj, EYE2, 0.0) < 1e-10


def test_polar_rates_of_dissipative_flow():
    # drho/dt = -gamma rho and dtheta/dt = rho, checked by finite differences
    gamma = 0.8
    traj = integrate_ode(AFFINE, EYE2, gamma, to_cartesian(PolarVelocity(1.0, 0.0, 1)),
                         (0.0, 3.0), dt=1e-3)
    rho = np.hypot(traj.states[:, 0], traj.states[:, 1])
    theta = np.arctanh(-traj.states[:, 0] / rho)
    drho = np.gradient(rho, traj.times)
    dtheta = np.gradient(theta, traj.times)
    assert np.max(np.abs(drho[2:-2] + gamma * rho[2:-2])) < 1e-4
    assert np.max(np.abs(dtheta[2:-2] - rho[2:-2])) < 1e-4


def test_divergence_detection():
    # gamma dt far beyond the RK4 stability limit blows the state up
    with pytest.raises(DivergenceError):
        integrate_ode(AFFINE, EYE2, 100.0, [1.0, 1.0], (0.0, 60.0), dt=0.5)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 2)), {})
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), np.zeros((3, 2)), {})
