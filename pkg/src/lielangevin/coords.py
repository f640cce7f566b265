"""Hyperbolic polar chart on the affine algebra's velocity plane.

    v0 = -rho tanh(theta),   v1 = rho eps sech(theta),   eps = +-1

rho > 0 is the speed (v0^2 + v1^2 = rho^2), theta ranges over the whole real
line, and the discrete sign eps covers the two half planes v1 > 0 and v1 < 0.
In this chart the invariant measure dv0 dv1 / |v1| becomes the flat
drho dtheta, i.e. (rho, theta) are canonically conjugate.

The line v1 = 0 is a chart singularity (theta = +-infinity); conversions
raise ChartSingularityError there.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .algebra import ChartSingularityError


class PolarVelocity(NamedTuple):
    rho: float
    theta: float
    epsilon: int = 1


def sech(x):
    """Numerically safe sech, valid for arbitrarily large |x|."""
    x = np.abs(x)
    e = np.exp(-x)
    return 2.0 * e / (1.0 + e * e)


def artanh(x):
    """artanh via log1p, stable as |x| -> 1."""
    return 0.5 * (np.log1p(x) - np.log1p(-x))


def to_cartesian(p: PolarVelocity) -> np.ndarray:
    """Map (rho, theta, eps) to (v0, v1)."""
    rho, theta, eps = p
    if rho <= 0:
        raise ValueError("rho must be positive")
    if eps not in (-1, 1):
        raise ValueError("epsilon must be +1 or -1")
    return np.array([-rho * np.tanh(theta), rho * eps * sech(theta)])


def to_polar(v) -> PolarVelocity:
    """Invert the chart. Requires v1 != 0.

    theta is recovered from artanh(-v0/rho) while |v0|/rho is comfortably
    below 1 and from arccosh(rho/|v1|) otherwise; the switch avoids the
    catastrophic saturation of tanh near the chart boundary and keeps the
    round trip exact to ~1e-15 out to |theta| ~ 700.
    """
    v = np.asarray(v, dtype=float)
    v0, v1 = float(v[0]), float(v[1])
    if v1 == 0.0:
        raise ChartSingularityError("v1 = 0 lies on the chart boundary (theta infinite)")
    rho = math.hypot(v0, v1)
    t = -v0 / rho
    if abs(t) <= 0.9:
        theta = float(artanh(t))
    else:
        # rho/|v1| = cosh(theta); sign of theta follows -v0
        theta = math.copysign(math.acosh(rho / abs(v1)), t)
    eps = 1 if v1 > 0 else -1
    return PolarVelocity(rho, theta, eps)


def measure_mu(v) -> float:
    """Density of the invariant measure against dv0 dv1: mu = 1/|v1|.

    Under the chart this equals 1/(rho sech theta).
    """
    v = np.asarray(v, dtype=float)
    v1 = float(v[1])
    if v1 == 0.0:
        raise ChartSingularityError("mu is singular on v1 = 0")
    return 1.0 / abs(v1)


def measure_mu_polar(p: PolarVelocity) -> float:
    return 1.0 / (p.rho * float(sech(p.theta)))


def jacobian_polar_to_cartesian(p: PolarVelocity) -> np.ndarray:
    """Matrix of partials d(v0, v1)/d(rho, theta); |det| = rho sech(theta)."""
    rho, theta, eps = p
    if rho <= 0:
        raise ValueError("rho must be positive")
    th = np.tanh(theta)
    sh = float(sech(theta))
    return np.array([
        [-th, -rho * sh * sh],
        [eps * sh, -rho * eps * sh * th],
    ])


def poincare_metric(p: PolarVelocity):
    """Pullback of dv0^2 + dv1^2: diag(1, rho^2 sech^2 theta), and its inverse."""
    if p.rho <= 0:
        raise ValueError("rho must be positive")
    s2 = float(sech(p.theta)) ** 2
    g = np.diag([1.0, p.rho**2 * s2])
    g_inv = np.diag([1.0, 1.0 / (p.rho**2 * s2)])
    return g, g_inv
