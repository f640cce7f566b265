"""Stochastic simulation of the dissipative geodesic Langevin dynamics.

Two schemes are implemented because the additive-noise Cartesian equation
and the polar-chart Fokker-Planck equation are not an Ito pair:

* CARTESIAN_NAIVE integrates the literal Langevin system
  dv = (-gamma G v + V(v)) dt + sqrt(2D) dW on the flat measure, with V
  the geodesic field. It is ergodic on the whole plane (it crosses v1 = 0
  freely) and its stationary law is sampled as-is.

* POLAR_FPK integrates the diffusion whose forward Kolmogorov equation is
  the polar-chart equation solved by the fpk module:
  d rho = -gamma rho dt + sqrt(2D) dW1 (reflected at rho_min) and
  d theta = [(D/rho^2) sinh(2 theta) + H'(rho)] dt
            + sqrt(2D) cosh(theta)/rho dW2.
  Internally the angular step is taken in u = tanh(theta), where the same
  SDE reads du = H'(rho)(1 - u^2) dt + sqrt(2D) sqrt(1 - u^2)/rho dW2 (the
  sinh drift is exactly the Ito correction of artanh) and stays bounded.
  This process reaches the chart boundary |theta| = infinity (v1 = 0) in
  finite time at rate 2*gamma from its quasi-stationary state. Exited
  trajectories are reinjected from a frozen pool of ensemble states that
  is refreshed in generations during burn-in; the renewal map's fixed
  point is the quasi-stationary density, matching the renormalized PDE
  limit. Pools are rebuilt deterministically in trajectory order, so
  results are bit-identical for any worker count.

RNG streams: trajectory i draws from Philox seeded with
SeedSequence((seed, i)); each simulation block draws a fixed layout of
normals and uniforms, so the noise a trajectory sees depends only on
(seed, i) and never on chunking, threading or the paths of other
trajectories.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .algebra import LieAlgebra, ModelParams, HamiltonianKind
from .coords import artanh
from .stats import Histogram2D, bin_samples

_BLOCK = 1024
_CHUNK = 2048
_POOL_CAP = 1 << 19


class Scheme(enum.Enum):
    CARTESIAN_NAIVE = "cartesian_naive"
    POLAR_FPK = "polar_fpk"


class DivergenceBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic white noise, <eta_a(t) eta_b(t')> = 2 D delta_ab delta(t-t')."""

    D: float

    def __post_init__(self):
        if self.D <= 0:
            raise ValueError("D must be positive")


@dataclass(frozen=True)
class EnsembleConfig:
    n_traj: int
    t_burn: float
    t_sample: float
    dt: float
    seed: int
    scheme: Scheme = Scheme.POLAR_FPK
    rho_min: float = 1e-3
    theta_max: float = 8.0
    stride_t: float = 0.05
    n_generations: int = 8

    def __post_init__(self):
        if self.n_traj <= 0:
            raise ValueError("n_traj must be positive")
        if self.t_burn < 0 or self.t_sample < 0:
            raise ValueError("t_burn and t_sample must be nonnegative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.stride_t < self.dt:
            raise ValueError("stride_t must be at least dt")

    def echo(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        return d


@dataclass
class EnsembleResult:
    """Stride samples collected after burn-in, ordered by (time, trajectory).

    samples has shape (n_samples, 2) holding (rho, theta) pairs for
    POLAR_FPK and shape (n_samples, dim) holding velocity components for
    CARTESIAN_NAIVE. Bit-for-bit reproducible from (config, seed).
    """

    samples: np.ndarray
    scheme: Scheme
    config: dict
    divergence_count: int = 0
    chart_exit_count: int = 0

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def to_histogram(self, edges_x, edges_y, cols=(0, 1)) -> Histogram2D:
        return bin_samples(self.samples[:, list(cols)], edges_x, edges_y)


# ---------------------------------------------------------------------------
# single-step contract surface
# ---------------------------------------------------------------------------

def step_cartesian_naive(alg: LieAlgebra, params: ModelParams, gamma: float,
                         D: float, v, dt: float, noise_draw) -> np.ndarray:
    """One Euler-Maruyama step of dv = (-gamma G v + V(v)) dt + sqrt(2 D dt) xi.

    The drag is the Ohmic energy-gradient force with Gamma = gamma * I,
    i.e. -gamma (G v), which reduces to -gamma v whenever G = I.
    """
    from .algebra import geodesic_field
    v = np.asarray(v, float)
    xi = np.asarray(noise_draw, float)
    drift = -gamma * (params.G @ v) + geodesic_field(alg, params, v)
    v_new = v + drift * dt + math.sqrt(2.0 * D * dt) * xi
    if not np.all(np.isfinite(v_new)):
        raise FloatingPointError(f"divergent state {v_new}")
    return v_new


def step_polar_fpk(params: ModelParams, gamma: float, D: float, p, dt: float,
                   noise_draw, rho_min: float = 1e-3):
    """One Euler-Maruyama step of the polar diffusion; returns (rho, theta).

    rho reflects at rho_min. The angular update is taken in u = tanh(theta)
    (exactly the stated theta-SDE under Ito change of variables). A step
    that carries u past +-1 has crossed the chart boundary v1 = 0; the
    returned theta is then +-inf and the caller decides how to reinject.
    """
    rho, theta = float(p[0]), float(p[1])
    if rho <= rho_min:
        raise ValueError("rho must start above rho_min")
    xi1, xi2 = float(noise_draw[0]), float(noise_draw[1])
    s = math.sqrt(2.0 * D * dt)
    rho_new = rho - gamma * rho * dt + s * xi1
    if rho_new < rho_min:
        rho_new = 2.0 * rho_min - rho_new
    u = math.tanh(theta)
    hprime = params.k / rho**2 if params.k != 0.0 else 0.0
    u_new = u + hprime * (1.0 - u * u) * dt + (s / rho) * math.sqrt(max(1.0 - u * u, 0.0)) * xi2
    if not (math.isfinite(rho_new) and math.isfinite(u_new)):
        raise FloatingPointError(f"divergent state ({rho_new}, {u_new})")
    if abs(u_new) >= 1.0:
        return rho_new, math.inf if u_new > 0 else -math.inf
    return rho_new, float(artanh(u_new))


# ---------------------------------------------------------------------------
# vectorized kernels
# ---------------------------------------------------------------------------

def _polar_step_arrays(rho, u, gamma, D, k, dt, xi1, xi2, rho_min, u_abs=1.0):
    """Vectorized (rho, u) update; returns new arrays and the exit mask."""
    s = math.sqrt(2.0 * D * dt)
    rho_new = rho - gamma * rho * dt + s * xi1
    np.subtract(2.0 * rho_min, rho_new, out=rho_new, where=rho_new < rho_min)
    drift_u = (k / rho**2) * (1.0 - u * u) * dt if k != 0.0 else 0.0
    u_new = u + drift_u + (s / rho) * np.sqrt(np.maximum(1.0 - u * u, 0.0)) * xi2
    exited = np.abs(u_new) >= u_abs
    return rho_new, u_new, exited


def _traj_generators(seed: int, lo: int, hi: int):
    return [np.random.Generator(np.random.Philox(key=np.random.SeedSequence((seed, i)).generate_state(2, np.uint64)))
            for i in range(lo, hi)]


class _PolarChunk:
    """State of one contiguous block of POLAR_FPK trajectories."""

    def __init__(self, seed, lo, hi, beta_for_init, theta_max):
        self.lo, self.hi = lo, hi
        self.n = hi - lo
        self.gens = _traj_generators(seed, lo, hi)
        self.u_abs = math.tanh(theta_max)
        init = np.empty((self.n, 2))
        for i, g in enumerate(self.gens):
            init[i, 0] = np.linalg.norm(g.normal(0.0, 1.0, 3)) / math.sqrt(beta_for_init)
            init[i, 1] = g.uniform(-0.9, 0.9)
        self.rho = init[:, 0].copy()
        self.u = init[:, 1].copy()
        self.initial = init
        self.exits = 0
        self.divergences = 0

    def run(self, n_steps, gamma, D, k, dt, rho_min, pool,
            collect_stride=None, step_offset=0):
        """Advance n_steps; restart exits from `pool` (frozen (m,2) array).

        Collected stride samples (every collect_stride steps, counted from
        the global step_offset) are returned as an (n_collected, n, 2)
        array in (rho, u) coordinates.
        """
        n = self.n
        collected = []
        done = 0
        while done < n_steps:
            b = min(_BLOCK, n_steps - done)
            xi = np.empty((n, b, 2))
            ur = np.empty((n, b))
            for i, g in enumerate(self.gens):
                xi[i] = g.standard_normal((b, 2))
                ur[i] = g.random(b)
            for t in range(b):
                rho_new, u_new, exited = _polar_step_arrays(
                    self.rho, self.u, gamma, D, k, dt, xi[:, t, 0], xi[:, t, 1],
                    rho_min, self.u_abs)
                bad = ~(np.isfinite(rho_new) & np.isfinite(u_new))
                if bad.any():
                    self.divergences += int(bad.sum())
                    exited = exited | bad
                if exited.any():
                    self.exits += int(exited.sum())
                    idx = (ur[exited.nonzero()[0], t] * len(pool)).astype(np.intp)
                    rho_new[exited] = pool[idx, 0]
                    u_new[exited] = pool[idx, 1]
                self.rho, self.u = rho_new, u_new
                gstep = step_offset + done + t
                if collect_stride is not None and gstep % collect_stride == 0:
                    collected.append(np.column_stack([self.rho, self.u]))
            done += b
        if collected:
            return np.stack(collected)
        return np.empty((0, n, 2))


class _CartesianChunk:
    """State of one contiguous block of CARTESIAN_NAIVE trajectories."""

    def __init__(self, seed, lo, hi, alg, params):
        self.lo, self.hi = lo, hi
        self.n = hi - lo
        self.gens = _traj_generators(seed, lo, hi)
        self.dim = alg.dim
        self.f = alg.f
        self.G = params.G
        self.k = params.k
        self.inverse_rho = params.hamiltonian_kind is HamiltonianKind.INVERSE_RHO
        sigma = 1.0 / math.sqrt(params.beta)
        self.v = np.empty((self.n, self.dim))
        for i, g in enumerate(self.gens):
            self.v[i] = g.normal(0.0, sigma, self.dim)
        self.divergences = 0

    def _drift(self, v, gamma):
        Gv = v @ self.G
        V = -np.einsum("abc,nb,nc->na", self.f, Gv, v)
        if self.inverse_rho:
            rho2 = np.einsum("na,na->n", v, Gv)
            V *= (self.k / (rho2 * np.sqrt(rho2)))[:, None]
        return -gamma * Gv + V

    def run(self, n_steps, gamma, D, dt, collect_stride=None, step_offset=0):
        n = self.n
        s = math.sqrt(2.0 * D * dt)
        collected = []
        done = 0
        while done < n_steps:
            b = min(_BLOCK, n_steps - done)
            xi = np.empty((n, b, self.dim))
            for i, g in enumerate(self.gens):
                xi[i] = g.standard_normal((b, self.dim))
            for t in range(b):
                v_new = self.v + self._drift(self.v, gamma) * dt + s * xi[:, t]
                bad = ~np.isfinite(v_new).all(axis=1)
                if bad.any():
                    self.divergences += int(bad.sum())
                    v_new[bad] = self.v[bad] * 0.0  # reseed diverged walker at rest
                self.v = v_new
                gstep = step_offset + done + t
                if collect_stride is not None and gstep % collect_stride == 0:
                    collected.append(self.v.copy())
            done += b
        if collected:
            return np.stack(collected)
        return np.empty((0, n, self.dim))


def _thin_pool(states: np.ndarray, cap: int = _POOL_CAP) -> np.ndarray:
    if len(states) <= cap:
        return states
    step = int(math.ceil(len(states) / cap))
    return states[::step]


def _map_chunks(fn, chunks, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, chunks))
    return [fn(c) for c in chunks]


def run_ensemble(alg: LieAlgebra, params: ModelParams, gamma: float,
                 cfg: EnsembleConfig, noise: NoiseModel,
                 threads: int = 1) -> EnsembleResult:
    """Simulate cfg.n_traj independent trajectories and collect stride samples.

    Deterministic for fixed (cfg, seed) regardless of `threads`: trajectory
    streams are keyed by index, chunking is fixed, and reinjection pools
    are assembled in index order at global stage barriers.

    For POLAR_FPK the burn-in is split into cfg.n_generations stages; each
    stage's reinjection pool is the frozen sample set of the previous stage
    (mean-field renewal, converging to the quasi-stationary law). Fails
    with DivergenceBudgetError if more than 0.1% of trajectories diverge.
    """
    D = noise.D
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if cfg.scheme is Scheme.POLAR_FPK:
        guard = min(1.0 / gamma if gamma > 0 else math.inf,
                    cfg.rho_min**2 / (2.0 * D))
        if cfg.dt >= guard:
            raise ValueError(
                f"dt = {cfg.dt} violates the PolarFPK stability guard "
                f"dt < min(1/gamma, rho_min^2/(2D)) = {guard:.3g}; "
                f"raise rho_min or lower dt")
    stride = max(1, int(round(cfg.stride_t / cfg.dt)))
    bounds = list(range(0, cfg.n_traj, _CHUNK)) + [cfg.n_traj]
    spans = list(zip(bounds[:-1], bounds[1:]))

    if cfg.scheme is Scheme.CARTESIAN_NAIVE:
        chunks = [_CartesianChunk(cfg.seed, lo, hi, alg, params) for lo, hi in spans]
        n_burn = int(round(cfg.t_burn / cfg.dt))
        n_samp = int(round(cfg.t_sample / cfg.dt))
        _map_chunks(lambda c: c.run(n_burn, gamma, D, cfg.dt), chunks, threads)
        outs = _map_chunks(lambda c: c.run(n_samp, gamma, D, cfg.dt,
                                           collect_stride=stride,
                                           step_offset=n_burn), chunks, threads)
        samples = np.concatenate(outs, axis=1).reshape(-1, alg.dim)
        div = sum(c.divergences for c in chunks)
        if div > 1e-3 * cfg.n_traj:
            raise DivergenceBudgetError(f"{div} of {cfg.n_traj} trajectories diverged")
        return EnsembleResult(samples, cfg.scheme, cfg.echo(), divergence_count=div)

    # POLAR_FPK
    if alg.name != "affine":
        raise ValueError("the polar scheme is defined on the affine algebra's chart")
    chunks = [_PolarChunk(cfg.seed, lo, hi, params.beta, cfg.theta_max) for lo, hi in spans]
    pool = np.concatenate([c.initial for c in chunks])
    gens = max(1, cfg.n_generations)
    stage_steps = int(round(cfg.t_burn / cfg.dt / gens))
    offset = 0
    for g in range(gens):
        outs = _map_chunks(
            lambda c: c.run(stage_steps, gamma, D, params.k, cfg.dt, cfg.rho_min,
                            pool, collect_stride=stride, step_offset=offset),
            chunks, threads)
        stage_samples = np.concatenate(outs, axis=1).reshape(-1, 2)
        if len(stage_samples):
            pool = _thin_pool(stage_samples)
        offset += stage_steps
    n_samp = int(round(cfg.t_sample / cfg.dt))
    outs = _map_chunks(
        lambda c: c.run(n_samp, gamma, D, params.k, cfg.dt, cfg.rho_min,
                        pool, collect_stride=stride, step_offset=offset),
        chunks, threads)
    ru = np.concatenate(outs, axis=1).reshape(-1, 2)
    u_abs = math.tanh(cfg.theta_max)
    samples = np.column_stack([ru[:, 0], artanh(np.clip(ru[:, 1], -u_abs, u_abs))])
    div = sum(c.divergences for c in chunks)
    exits = sum(c.exits for c in chunks)
    if div > 1e-3 * cfg.n_traj:
        raise DivergenceBudgetError(f"{div} of {cfg.n_traj} trajectories diverged")
    return EnsembleResult(samples, cfg.scheme, cfg.echo(),
                          divergence_count=div, chart_exit_count=exits)
