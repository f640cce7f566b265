"""Candidate equilibrium densities on the hyperboloid and their adjudication.

Two analytic candidates are assembled: the Boltzmann density e^{-beta E}
(a static solution whose normalization integral diverges linearly in the
angular coordinate) and the separated static solution
e^{-beta rho^2/2} Q2(rho) Q1(theta) with the integrable angular branch
(Q1 = sech^2 theta at k = 0) and a selectable radial branch.
Normalizability is measured by nested-domain quadrature rather than
asserted; the decaying radial branch turns out to be only marginally
integrable (it grows like 1/rho toward the origin), so the definitive
equilibrium object for comparisons is the quasi-stationary output of
fpk.evolve_to_stationary, wrapped here with the same interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .coords import sech
from . import specfun
from .stats import Histogram2D, bin_samples, total_variation, chi_square_test


@dataclass
class CandidateEquilibrium:
    """A density P(rho, theta) with respect to drho dtheta, plus metadata.

    cartesian_density is the corresponding density with respect to
    dv0 dv1, i.e. P/(rho sech theta) = P/|v1|, defined off the line
    v1 = 0. normalizable is "yes", "no" or "marginal" with the measured
    certificate attached in report; Z is the normalization when it exists.
    """

    name: str
    density: Callable
    cartesian_density: Callable
    normalizable: str
    Z: Optional[float] = None
    report: dict = field(default_factory=dict)

    def __call__(self, rho, theta):
        return self.density(rho, theta)


def _cartesian_from_polar(density):
    def p(v0, v1):
        v0 = np.asarray(v0, float)
        v1 = np.asarray(v1, float)
        rho = np.hypot(v0, v1)
        with np.errstate(divide="ignore", invalid="ignore"):
            theta = np.arctanh(np.clip(-v0 / np.where(rho > 0, rho, 1.0), -1 + 1e-15, 1 - 1e-15))
            out = np.where(v1 != 0, density(rho, theta) / np.maximum(np.abs(v1), 1e-300), 0.0)
        return out
    return p


# ---------------------------------------------------------------------------
# Boltzmann candidate
# ---------------------------------------------------------------------------

def boltzmann_candidate(beta: float) -> CandidateEquilibrium:
    """P(rho, theta) = e^{-beta rho^2/2}: static, but not normalizable.

    The certificate is the theta-truncated normalization
    I(L) = integral e^{-beta rho^2/2} drho * 2L, which grows linearly in
    the cutoff L (equivalently, the Cartesian density ~ 1/|v1| diverges
    logarithmically near v1 = 0).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")

    def density(rho, theta):
        rho = np.asarray(rho, float)
        return np.exp(-beta * rho**2 / 2.0) * np.ones_like(np.asarray(theta, float))

    radial_integral, _ = integrate.quad(lambda r: math.exp(-beta * r * r / 2), 0, np.inf)
    Ls = np.array([5.0, 10.0, 20.0, 40.0])
    I = radial_integral * 2 * Ls
    A = np.vstack([Ls, np.ones_like(Ls)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, I, rcond=None)
    ss_tot = np.sum((I - I.mean()) ** 2)
    r2 = 1.0 - (res[0] / ss_tot if len(res) else 0.0)
    report = {
        "certificate": "theta-truncated normalization grows linearly in the cutoff",
        "L": Ls.tolist(),
        "I": I.tolist(),
        "slope": float(slope),
        "intercept": float(intercept),
        "r_squared": float(r2),
        "radial_integral": float(radial_integral),
    }
    return CandidateEquilibrium("boltzmann", density, _cartesian_from_polar(density),
                                normalizable="no", Z=None, report=report)


# ---------------------------------------------------------------------------
# separated candidate
# ---------------------------------------------------------------------------

def _radial_profile_spline(beta, beta1, branch, rho_max):
    """Vectorize a radial branch by cubic-spline sampling on a fine grid."""
    sol = specfun.radial_solution(beta, beta1, branch)
    rr = np.linspace(1e-4, rho_max, 3000)
    try:
        vals = np.asarray(sol(rr), float)
        if vals.shape != rr.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(sol(r)) for r in rr])
    return CubicSpline(rr, vals, extrapolate=True), sol


def assess_radial_normalizability(beta, radial_func, rho_mins=(1e-2, 1e-3, 1e-4),
                                  rho_max=None) -> dict:
    """Nested-domain quadrature trend of integral e^{-w} |Q2| drho.

    Convergent as rho_min -> 0 gives "yes"; growth linear in
    ln(1/rho_min) gives "marginal"; faster growth gives "no".
    """
    rho_max = rho_max or 8.0 / math.sqrt(beta)
    w = lambda r: math.exp(-beta * r * r / 2.0)
    Is = []
    for rm in rho_mins:
        val, _ = integrate.quad(lambda r: w(r) * abs(float(radial_func(r))), rm, rho_max,
                                limit=200)
        Is.append(val)
    Is = np.array(Is)
    x = np.log(1.0 / np.asarray(rho_mins))
    slope = (Is[-1] - Is[0]) / (x[-1] - x[0])
    increments = np.diff(Is)
    rel_growth = slope / Is[-1]
    if rel_growth < 5e-3:
        status = "yes"
    elif len(increments) >= 2 and increments[-1] > 1.5 * increments[0]:
        status = "no"
    else:
        status = "marginal"
    return {
        "rho_mins": list(rho_mins),
        "integrals": Is.tolist(),
        "log_slope": float(slope),
        "relative_growth_per_efold": float(rel_growth),
        "status": status,
    }


def paper_candidate(beta: float, a: float = 0.0,
                    radial_branch=None) -> CandidateEquilibrium:
    """The separated static candidate with the integrable angular branch.

    At a = 0 the angular factor is exactly sech^2(theta) (beta1 = 2); for
    a != 0 it is the lowest integrable eigenfunction with beta1(a) > 2.
    The radial factor defaults to the decaying TRICOMI_U branch (the
    bounded-at-infinity selection); its measured normalizability status
    and certificate are attached. Density values are with respect to
    drho dtheta and are normalized over the assessment domain.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    radial_branch = radial_branch or specfun.RadialBranch.TRICOMI_U
    rho_max = 8.0 / math.sqrt(beta)
    if a == 0.0:
        beta1 = 2.0
        angular = lambda th: sech(th) ** 2
        angular_integral = 2.0
    else:
        pairs = specfun.solve_angular_eigen(a, n_grid=800)
        ground = next(p for p in pairs if p.integrable)
        beta1 = ground.beta1
        angular = ground
        angular_integral, _ = integrate.quad(lambda t: abs(float(ground(t))), -30, 30,
                                             limit=200)
    spline, sol = _radial_profile_spline(beta, beta1, radial_branch, rho_max)
    norm_report = assess_radial_normalizability(beta, spline)

    radial_mass, _ = integrate.quad(
        lambda r: math.exp(-beta * r * r / 2.0) * abs(float(spline(r))), 1e-3, rho_max,
        limit=200)
    scale = 1.0 / (radial_mass * angular_integral)

    def density(rho, theta):
        rho = np.asarray(rho, float)
        theta = np.asarray(theta, float)
        return (scale * np.exp(-beta * rho**2 / 2.0) * spline(rho)
                * np.asarray(angular(theta), float))

    status = norm_report["status"]
    Z = None
    report = {
        "beta1": float(beta1),
        "radial_branch": radial_branch.value,
        "radial_normalizability": norm_report,
        "angular_integral": float(angular_integral),
        "normalized_over": f"rho in [1e-3, {rho_max:.3g}], theta in R",
    }
    return CandidateEquilibrium(f"separated(a={a:g})", density,
                                _cartesian_from_polar(density),
                                normalizable=status, Z=Z, report=report)


def pde_equilibrium(grid) -> CandidateEquilibrium:
    """Wrap a stationary DensityGrid from the PDE solver as a candidate."""
    interp = grid.interpolator()

    def density(rho, theta):
        rho, theta = np.broadcast_arrays(np.asarray(rho, float), np.asarray(theta, float))
        return interp(np.stack([rho, theta], axis=-1))

    return CandidateEquilibrium("pde_stationary", density,
                                _cartesian_from_polar(density),
                                normalizable="yes", Z=1.0,
                                report={"source": "evolve_to_stationary"})


# ---------------------------------------------------------------------------
# mode finding and sample comparison
# ---------------------------------------------------------------------------

def _golden_refine(f, x0, half_width, lo, hi):
    a = max(lo, x0 - half_width)
    b = min(hi, x0 + half_width)
    res = minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x), float(-res.fun)


def find_mode(cand: CandidateEquilibrium, chart: str = "polar",
              rho_max: float = 6.0, theta_max: float = 8.0,
              n_grid: int = 400) -> dict:
    """Locate the density's maximum: coarse grid scan plus 1-D refinement.

    chart is "polar" (scan (rho, theta)) or "cartesian" (scan (v0, v1),
    avoiding the v1 = 0 line). Reports multiple maxima when the top of the
    grid scan is flat to 1e-9 relative.
    """
    if chart == "polar":
        xs = np.linspace(1e-3, rho_max, n_grid)
        ys = np.linspace(-theta_max, theta_max, n_grid)
        F = cand.density(xs[:, None], ys[None, :])
        evaluate = lambda x, y: float(cand.density(np.array(x), np.array(y)))
    elif chart == "cartesian":
        xs = np.linspace(-rho_max, rho_max, n_grid)
        ys = np.linspace(-rho_max, rho_max, n_grid)
        F = cand.cartesian_density(xs[:, None], ys[None, :])
        evaluate = lambda x, y: float(cand.cartesian_density(np.array(x), np.array(y)))
    else:
        raise ValueError("chart must be 'polar' or 'cartesian'")
    F = np.asarray(F)
    i, j = np.unravel_index(np.nanargmax(F), F.shape)
    top = np.sort(F.ravel())[-8:]
    flat = top[-1] > 0 and (top[-1] - top[0]) < 1e-9 * abs(top[-1])
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    x, fx = _golden_refine(lambda t: evaluate(t, ys[j]), xs[i], hx, xs[0], xs[-1])
    y, fy = _golden_refine(lambda t: evaluate(x, t), ys[j], hy, ys[0], ys[-1])
    return {
        "chart": chart,
        "location": (x, y),
        "value": fy,
        "multiple_maxima": bool(flat),
    }


def compare_density_to_samples(cand: CandidateEquilibrium, samples,
                               edges_x, edges_y) -> dict:
    """Bin samples and compare with the candidate: TV, chi-square, per-bin report.

    samples may be an EnsembleResult or an (n, 2) array in the chart the
    candidate's density lives on ((rho, theta) for polar candidates).
    """
    arr = getattr(samples, "samples", samples)
    h = bin_samples(np.asarray(arr)[:, :2], edges_x, edges_y)
    tv = total_variation(h, cand.density)
    stat, dof, p = chi_square_test(h, cand.density)
    from .stats import density_cell_masses
    q = density_cell_masses(cand.density, h.edges_x, h.edges_y)
    q = q / q.sum()
    return {
        "tv_distance": float(tv),
        "chi2": float(stat),
        "chi2_dof": int(dof),
        "chi2_pvalue": float(p),
        "n_samples": int(h.total),
        "overflow": int(h.overflow),
        "per_bin": {
            "observed_fraction": (h.counts / h.total).tolist(),
            "expected_fraction": q.tolist(),
        },
    }


def sample_candidate_product(cand: CandidateEquilibrium, n: int, seed: int,
                             rho_range=(1e-3, 6.0), theta_range=(-8.0, 8.0)):
    """Draw samples from a factorized candidate by per-axis inverse CDF.

    Exact for candidates that separate as R(rho) * T(theta) (both analytic
    candidates at a = 0 do); used as the self-consistency oracle for the
    sample-comparison machinery.
    """
    rng = np.random.default_rng(seed)
    rr = np.linspace(*rho_range, 4001)
    tt = np.linspace(*theta_range, 4001)
    fr = np.asarray(cand.density(rr, np.zeros_like(rr)), float)
    ft = np.asarray(cand.density(np.full_like(tt, rr[len(rr) // 2]), tt), float)
    Fr = np.concatenate([[0.0], np.cumsum(0.5 * (fr[1:] + fr[:-1]) * np.diff(rr))])
    Ft = np.concatenate([[0.0], np.cumsum(0.5 * (ft[1:] + ft[:-1]) * np.diff(tt))])
    Fr /= Fr[-1]
    Ft /= Ft[-1]
    rho = np.interp(rng.random(n), Fr, rr)
    theta = np.interp(rng.random(n), Ft, tt)
    return np.column_stack([rho, theta])
