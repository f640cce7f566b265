"""Command-line driver: wires config files to experiments, emits CSV/JSON.

Subcommands: trajectory, simulate, fpk-solve, eigens, equilibrium,
compare, check-config. Exit codes: 0 success, 2 configuration error,
3 numeric failure. All outputs are deterministic for a fixed
(config, seed) apart from the ISO-8601 "created" field in JSON metadata.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import algebra as alg_mod
from . import dynamics, equilibrium, fpk, specfun
from .config import ConfigError, load_config
from .coords import to_polar
from .dynamics import DivergenceError
from .fpk import ConvergenceError, DensityGrid, FPKOperator, gaussian_bump
from .sde import DivergenceBudgetError, NoiseModel, Scheme, run_ensemble
from .stats import bin_samples, total_variation, chi_square_test


def _meta(cfg, seed=None):
    return {"created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "seed": seed, **cfg.echo()}


def _write_json(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True))


def _write_csv(path, header, columns):
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(columns), delimiter=",",
               header=",".join(header), comments="")


def cmd_trajectory(cfg, out_dir, seed, threads):
    sec = cfg.section("trajectory", required=True)
    alg = cfg.algebra()
    params = cfg.model_params()
    gamma = float(sec.get("gamma", cfg.gamma()))
    v0 = np.asarray(sec.get("v0", [0.0, 1.0]), float)
    t_span = sec.get("t_span", [0.0, 5.0])
    dt = float(sec.get("dt", 1e-3))
    traj = dynamics.integrate_ode(alg, params, gamma, v0, t_span, dt)
    E = np.array([alg_mod.energy(params, v) for v in traj.states])
    if alg.dim == 2:
        rho = np.hypot(traj.states[:, 0], traj.states[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            theta = np.where(traj.states[:, 1] != 0,
                             np.arctanh(np.clip(-traj.states[:, 0] /
                                                np.maximum(rho, 1e-300), -1 + 1e-16, 1 - 1e-16)),
                             np.nan)
        cols = [traj.times, traj.states[:, 0], traj.states[:, 1], rho, theta, E]
        header = ["t", "v0", "v1", "rho", "theta", "E"]
    else:
        cols = [traj.times] + [traj.states[:, a] for a in range(alg.dim)] + [E]
        header = ["t"] + [f"v{a}" for a in range(alg.dim)] + ["E"]
    _write_csv(out_dir / "trajectory.csv", header, cols)
    _write_json(out_dir / "trajectory.json", {"meta": _meta(cfg, seed), **traj.meta})
    print(f"trajectory: {len(traj.times)} points -> {out_dir / 'trajectory.csv'}")
    return 0


def cmd_simulate(cfg, out_dir, seed, threads):
    alg = cfg.algebra()
    params = cfg.model_params()
    gamma = cfg.gamma()
    ecfg = cfg.ensemble_config(seed_override=seed)
    result = run_ensemble(alg, params, gamma, ecfg, NoiseModel(cfg.noise_D()),
                          threads=threads)
    _write_csv(out_dir / "samples.csv",
               ["rho", "theta"] if result.scheme is Scheme.POLAR_FPK
               else [f"v{a}" for a in range(result.samples.shape[1])],
               [result.samples[:, j] for j in range(result.samples.shape[1])])
    if result.scheme is Scheme.POLAR_FPK:
        edges_r = np.linspace(0.0, 6.0 / math.sqrt(params.beta), 51)
        edges_t = np.linspace(-ecfg.theta_max, ecfg.theta_max, 51)
        h = result.to_histogram(edges_r, edges_t)
        hist_payload = {"edges_rho": h.edges_x.tolist(), "edges_theta": h.edges_y.tolist(),
                        "counts": h.counts.tolist(), "total": h.total,
                        "overflow": h.overflow}
    else:
        lim = 4.0 / math.sqrt(params.beta)
        edges = np.linspace(-lim, lim, 51)
        h = result.to_histogram(edges, edges)
        hist_payload = {"edges_x": h.edges_x.tolist(), "edges_y": h.edges_y.tolist(),
                        "counts": h.counts.tolist(), "total": h.total,
                        "overflow": h.overflow}
    _write_json(out_dir / "histogram.json",
                {"meta": _meta(cfg, ecfg.seed), **hist_payload,
                 "divergences": result.divergence_count,
                 "chart_exits": result.chart_exit_count})
    print(f"simulate: {result.n_samples} samples, {result.divergence_count} divergences, "
          f"{result.chart_exit_count} chart exits -> {out_dir}")
    return 0


def _solve_pde(cfg):
    params = cfg.model_params()
    rho_nodes, theta_nodes = cfg.grid()
    op = FPKOperator(rho_nodes, theta_nodes, cfg.gamma(), cfg.noise_D(),
                     beta=params.beta, k=params.k)
    P0 = gaussian_bump(rho_nodes, theta_nodes, rho0=1.0 / math.sqrt(params.beta))
    grid, report = op.evolve_to_stationary(P0, **cfg.evolve_opts())
    return op, grid, report


def cmd_fpk_solve(cfg, out_dir, seed, threads):
    op, grid, report = _solve_pde(cfg)
    R, T = np.meshgrid(grid.rho_nodes, grid.theta_nodes, indexing="ij")
    _write_csv(out_dir / "stationary.csv", ["rho", "theta", "P"],
               [R.ravel(), T.ravel(), grid.values.ravel()])
    _write_json(out_dir / "convergence.json", {
        "meta": _meta(cfg, seed),
        "converged": report.converged,
        "t_final": report.t_final,
        "steps": report.steps,
        "mass_loss_rate": report.mass_loss_rate,
        "mass_drift_per_step": report.mass_drift_per_step,
        "residual_history": report.residual_history,
    })
    print(f"fpk-solve: converged at t = {report.t_final:.2f}, "
          f"mass loss rate {report.mass_loss_rate:.4f} -> {out_dir}")
    return 0


def cmd_eigens(cfg, out_dir, seed, threads):
    sec = cfg.section("eigens")
    a_values = sec.get("a_values", [0.0, 0.25, 0.5, 1.0])
    n_grid = int(sec.get("n_grid", 800))
    params = cfg.model_params()
    rows = []
    print(f"{'a':>8} {'beta1 (branch eigenvalues)':>40}")
    for a in a_values:
        pairs = specfun.solve_angular_eigen(float(a), n_grid=n_grid)
        b = [p.beta1 for p in pairs]
        rows.append((a, b))
        print(f"{a:8.3f} {np.array2string(np.array(b), precision=6)}")
    ground = next(p for p in specfun.solve_angular_eigen(float(a_values[0]), n_grid=n_grid)
                  if p.integrable)
    th = np.linspace(-8, 8, 801)
    _write_csv(out_dir / "angular.csv", ["theta", "Q1"], [th, ground(th)])
    rr = np.linspace(0.05, 8.0, 400)
    beta = params.beta
    cols, names = [rr], ["rho"]
    for branch in specfun.RadialBranch:
        sol = specfun.radial_solution(beta, ground.beta1 if ground.beta1 > 0 else 2.0, branch)
        try:
            vals = np.asarray(sol(rr), float)
            if vals.shape != rr.shape:
                raise TypeError
        except (TypeError, ValueError):
            vals = np.array([float(sol(r)) for r in rr])
        cols.append(vals)
        names.append(branch.value)
    _write_csv(out_dir / "radial.csv", names, cols)
    _write_json(out_dir / "eigens.json",
                {"meta": _meta(cfg, seed),
                 "beta1_table": [{"a": float(a), "beta1": list(map(float, b))}
                                 for a, b in rows]})
    return 0


def cmd_equilibrium(cfg, out_dir, seed, threads):
    params = cfg.model_params()
    beta = params.beta
    a = params.k / cfg.noise_D()
    bol = equilibrium.boltzmann_candidate(beta)
    cand = equilibrium.paper_candidate(beta, a)
    rho_nodes, theta_nodes = cfg.grid()
    P = cand.density(rho_nodes[:, None], theta_nodes[None, :])
    R, T = np.meshgrid(rho_nodes, theta_nodes, indexing="ij")
    _write_csv(out_dir / "candidate_polar.csv", ["rho", "theta", "P"],
               [R.ravel(), T.ravel(), np.asarray(P).ravel()])
    lim = 3.0 / math.sqrt(beta)
    vs = np.linspace(-lim, lim, 200)
    pv = cand.cartesian_density(vs[:, None], vs[None, :])
    V0, V1 = np.meshgrid(vs, vs, indexing="ij")
    _write_csv(out_dir / "candidate_cartesian.csv", ["v0", "v1", "p"],
               [V0.ravel(), V1.ravel(), np.asarray(pv).ravel()])
    mode_p = equilibrium.find_mode(cand, "polar")
    mode_c = equilibrium.find_mode(cand, "cartesian", rho_max=lim)
    payload = {
        "meta": _meta(cfg, seed),
        "boltzmann": {"normalizable": bol.normalizable, "report": bol.report},
        "candidate": {"name": cand.name, "normalizable": cand.normalizable,
                      "Z": cand.Z, "report": cand.report,
                      "mode_polar": mode_p, "mode_cartesian": mode_c},
    }
    _write_json(out_dir / "equilibrium.json", payload)
    print(f"equilibrium: boltzmann normalizable = {bol.normalizable}; "
          f"{cand.name} normalizable = {cand.normalizable}")
    print(f"  polar mode at (rho, theta) = {mode_p['location']}")
    print(f"  cartesian mode at (v0, v1) = {mode_c['location']}, "
          f"|v| = {math.hypot(*mode_c['location']):.4f}")
    return 0


def cmd_compare(cfg, out_dir, seed, threads):
    alg = cfg.algebra()
    params = cfg.model_params()
    gamma = cfg.gamma()
    D = cfg.noise_D()
    ecfg = cfg.ensemble_config(seed_override=seed)
    result = run_ensemble(alg, params, gamma, ecfg, NoiseModel(D), threads=threads)
    op, grid, report = _solve_pde(cfg)
    bins = int(cfg.section("compare").get("bins", 50))
    edges_r = np.linspace(grid.rho_nodes[0], grid.rho_nodes[-1], bins + 1)
    edges_t = np.linspace(grid.theta_nodes[0], grid.theta_nodes[-1], bins + 1)
    h = result.to_histogram(edges_r, edges_t)
    pde_cand = equilibrium.pde_equilibrium(grid)
    bol = equilibrium.boltzmann_candidate(params.beta)
    paper = equilibrium.paper_candidate(params.beta, params.k / D)
    table = {}
    for name, cand in (("pde", pde_cand), ("boltzmann", bol), ("paper_candidate", paper)):
        tv = total_variation(h, cand.density)
        stat, dof, p = chi_square_test(h, cand.density)
        table[f"mc_vs_{name}"] = {"tv": float(tv), "chi2": float(stat),
                                  "dof": int(dof), "pvalue": float(p)}
    payload = {
        "meta": _meta(cfg, ecfg.seed),
        "n_samples": result.n_samples,
        "chart_exits": result.chart_exit_count,
        "pde_mass_loss_rate": report.mass_loss_rate,
        "comparisons": table,
        "normalizability": {"boltzmann": bol.normalizable, "paper": paper.normalizable},
    }
    _write_json(out_dir / "compare.json", payload)
    print("compare:")
    for k, v in table.items():
        print(f"  {k}: TV = {v['tv']:.4f}")
    return 0


def cmd_check_config(cfg, out_dir, seed, threads):
    cfg.algebra()
    cfg.model_params()
    if "ensemble" in cfg.raw:
        cfg.ensemble_config()
    cfg.grid()
    print(f"config ok: {cfg.path}")
    print(json.dumps(cfg.raw, indent=1, sort_keys=True, default=str))
    return 0


_COMMANDS = {
    "trajectory": cmd_trajectory,
    "simulate": cmd_simulate,
    "fpk-solve": cmd_fpk_solve,
    "eigens": cmd_eigens,
    "equilibrium": cmd_equilibrium,
    "compare": cmd_compare,
    "check-config": cmd_check_config,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="lielangevin",
        description="Stochastic geodesic dynamics on Lie algebras: simulation, "
                    "PDE solving and equilibrium adjudication on the hyperboloid.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="TOML or JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker thread cap")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    try:
        return _COMMANDS[args.command](cfg, out_dir, args.seed, max(1, args.threads))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DivergenceError, DivergenceBudgetError, ConvergenceError,
            FloatingPointError, OverflowError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
