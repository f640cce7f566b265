import numpy as np
import pytest

from lielangevin.algebra import ChartSingularityError
from lielangevin.coords import (PolarVelocity, artanh, jacobian_polar_to_cartesian,
                                measure_mu, measure_mu_polar, poincare_metric, sech,
                                to_cartesian, to_polar)


def test_to_cartesian_basics():
    assert np.allclose(to_cartesian(PolarVelocity(1.0, 0.0, 1)), [0.0, 1.0])
    assert np.allclose(to_cartesian(PolarVelocity(2.0, 0.0, -1)), [0.0, -2.0])
    v = to_cartesian(PolarVelocity(1.0, 20.0, 1))
    assert v[0] == pytest.approx(-1.0, abs=1e-15)
    assert 0 < v[1] < 1e-8


def test_to_polar_basics():
    p = to_polar([0.0, 3.0])
    assert (p.rho, p.theta, p.epsilon) == (3.0, 0.0, 1)
    p = to_polar([-3.0, 4.0])
    assert p.rho == pytest.approx(5.0)
    assert p.theta == pytest.approx(artanh(0.6))
    assert p.epsilon == 1
    with pytest.raises(ChartSingularityError):
        to_polar([1.0, 0.0])


def test_round_trip_wide_range():
    rng = np.random.default_rng(5)
    rhos = 10.0 ** rng.uniform(-3, 3, 300)
    thetas = rng.uniform(-30, 30, 300)
    eps = rng.choice([-1, 1], 300)
    for rho, th, e in zip(rhos, thetas, eps):
        v = to_cartesian(PolarVelocity(rho, th, int(e)))
        assert v[0] ** 2 + v[1] ** 2 == pytest.approx(rho**2, rel=1e-12)
        back = to_polar(v)
        assert back.rho == pytest.approx(rho, rel=1e-12)
        assert back.theta == pytest.approx(th, rel=1e-12, abs=1e-12)
        assert back.epsilon == e


def test_measure_mu():
    assert measure_mu([0.0, 1.0]) == 1.0
    assert measure_mu([0.0, 2.0]) == 0.5
    assert measure_mu([-3.0, 4.0]) == 0.25
    with pytest.raises(ChartSingularityError):
        measure_mu([1.0, 0.0])


def test_mu_consistent_between_charts():
    rng = np.random.default_rng(6)
    for _ in range(50):
        p = PolarVelocity(float(10 ** rng.uniform(-2, 2)), float(rng.uniform(-5, 5)),
                          int(rng.choice([-1, 1])))
        assert measure_mu_polar(p) == pytest.approx(measure_mu(to_cartesian(p)), rel=1e-12)


def test_jacobian_determinant_and_measure():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = PolarVelocity(float(10 ** rng.uniform(-2, 2)), float(rng.uniform(-6, 6)),
                          int(rng.choice([-1, 1])))
        J = jacobian_polar_to_cartesian(p)
        det = abs(np.linalg.det(J))
        assert det == pytest.approx(p.rho * float(sech(p.theta)), rel=1e-12)
        # |det J| * mu = 1: the chart maps the invariant measure to drho dtheta
        assert det * measure_mu(to_cartesian(p)) == pytest.approx(1.0, abs=1e-12)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(8)
    h = 1e-6
    for _ in range(50):
        rho = float(rng.uniform(0.1, 5.0))
        th = float(rng.uniform(-4, 4))
        p = PolarVelocity(rho, th, 1)
        J = jacobian_polar_to_cartesian(p)
        J_fd = np.empty((2, 2))
        J_fd[:, 0] = (to_cartesian(PolarVelocity(rho + h, th, 1))
                      - to_cartesian(PolarVelocity(rho - h, th, 1))) / (2 * h)
        J_fd[:, 1] = (to_cartesian(PolarVelocity(rho, th + h, 1))
                      - to_cartesian(PolarVelocity(rho, th - h, 1))) / (2 * h)
        assert np.allclose(J, J_fd, atol=1e-6)


def test_poincare_metric():
    g, gi = poincare_metric(PolarVelocity(1.0, 0.0, 1))
    assert np.allclose(g, np.eye(2))
    g, gi = poincare_metric(PolarVelocity(2.0, 0.0, 1))
    assert np.allclose(g, np.diag([1.0, 4.0]))
    rng = np.random.default_rng(9)
    for _ in range(20):
        p = PolarVelocity(float(rng.uniform(0.1, 10)), float(rng.uniform(-5, 5)), 1)
        g, gi = poincare_metric(p)
        assert np.allclose(g @ gi, np.eye(2), atol=1e-14)


def test_metric_is_pullback_of_euclidean():
    # J^T J = g to the finite-difference accuracy of J
    rng = np.random.default_rng(10)
    for _ in range(50):
        p = PolarVelocity(float(rng.uniform(0.1, 5)), float(rng.uniform(-4, 4)),
                          int(rng.choice([-1, 1])))
        J = jacobian_polar_to_cartesian(p)
        g, _ = poincare_metric(p)
        assert np.allclose(J.T @ J, g, atol=1e-10)
