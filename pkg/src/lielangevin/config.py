"""Experiment configuration: TOML/JSON loading with strict validation.

Every section has a fixed key set; unknown keys are rejected so typos fail
fast instead of silently running a default. See README for the schema.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from . import algebra as alg_mod
from .algebra import HamiltonianKind, LieAlgebra, ModelParams
from .sde import EnsembleConfig, Scheme

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "algebra": {"name", "dim", "f_entries"},
    "params": {"G", "beta", "gamma", "D", "k", "hamiltonian"},
    "ensemble": {"scheme", "n_traj", "t_burn", "t_sample", "dt", "seed",
                 "rho_min", "theta_max", "stride", "n_generations"},
    "grid": {"n_rho", "n_theta", "rho_min", "rho_max", "theta_max"},
    "evolve": {"dt", "t_max", "tol"},
    "trajectory": {"v0", "t_span", "dt", "gamma"},
    "eigens": {"a_values", "n_grid"},
    "compare": {"bins"},
    "output": {"dir"},
}


@dataclass
class ExperimentConfig:
    raw: dict
    path: str = "<dict>"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if not isinstance(self.raw, dict):
            raise ConfigError("top level must be a table/object")
        for section, content in self.raw.items():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}] in {self.path}")
            if not isinstance(content, dict):
                raise ConfigError(f"section [{section}] must be a table")
            unknown = set(content) - _SECTIONS[section]
            if unknown:
                raise ConfigError(
                    f"unknown key(s) {sorted(unknown)} in [{section}] of {self.path}")

    # -- section accessors --------------------------------------------------

    def section(self, name, required=False) -> dict:
        if required and name not in self.raw:
            raise ConfigError(f"missing required section [{name}] in {self.path}")
        return dict(self.raw.get(name, {}))

    def algebra(self) -> LieAlgebra:
        sec = self.section("algebra")
        name = sec.get("name", "affine")
        if name in alg_mod.BUILTIN_ALGEBRAS:
            return alg_mod.BUILTIN_ALGEBRAS[name]()
        if name == "custom":
            if "dim" not in sec or "f_entries" not in sec:
                raise ConfigError("custom algebra needs 'dim' and 'f_entries'")
            try:
                return alg_mod.from_entries(int(sec["dim"]), sec["f_entries"])
            except ValueError as e:
                raise ConfigError(f"invalid custom algebra: {e}") from e
        raise ConfigError(
            f"unknown algebra {name!r}; use one of {sorted(alg_mod.BUILTIN_ALGEBRAS)} or 'custom'")

    def model_params(self) -> ModelParams:
        sec = self.section("params")
        dim = self.algebra().dim
        G = sec.get("G", 1.0)
        G = np.eye(dim) * float(G) if np.isscalar(G) else np.asarray(G, float)
        gamma = float(sec.get("gamma", 1.0))
        D = float(sec.get("D", 1.0))
        beta = float(sec.get("beta", gamma / D))
        kind = {"quadratic": HamiltonianKind.QUADRATIC,
                "inverse_rho": HamiltonianKind.INVERSE_RHO}.get(
                    sec.get("hamiltonian", "quadratic"))
        if kind is None:
            raise ConfigError("hamiltonian must be 'quadratic' or 'inverse_rho'")
        try:
            return ModelParams(G=G, Gamma=gamma * np.eye(dim), Dtensor=D * np.eye(dim),
                               beta=beta, k=float(sec.get("k", 0.0)), hamiltonian_kind=kind)
        except ValueError as e:
            raise ConfigError(f"invalid params: {e}") from e

    def gamma(self) -> float:
        return float(self.section("params").get("gamma", 1.0))

    def noise_D(self) -> float:
        return float(self.section("params").get("D", 1.0))

    def ensemble_config(self, seed_override=None) -> EnsembleConfig:
        sec = self.section("ensemble", required=True)
        try:
            scheme = Scheme(sec.get("scheme", "polar_fpk"))
        except ValueError:
            raise ConfigError(f"unknown scheme {sec.get('scheme')!r}")
        try:
            return EnsembleConfig(
                n_traj=int(sec.get("n_traj", 1000)),
                t_burn=float(sec.get("t_burn", 10.0)),
                t_sample=float(sec.get("t_sample", 10.0)),
                dt=float(sec.get("dt", 1e-3)),
                seed=int(seed_override if seed_override is not None else sec.get("seed", 0)),
                scheme=scheme,
                rho_min=float(sec.get("rho_min", 1e-3)),
                theta_max=float(sec.get("theta_max", 8.0)),
                stride_t=float(sec.get("stride", 0.05)),
                n_generations=int(sec.get("n_generations", 8)),
            )
        except ValueError as e:
            raise ConfigError(f"invalid ensemble config: {e}") from e

    def grid(self):
        sec = self.section("grid")
        beta = float(self.section("params").get("beta",
                     self.gamma() / self.noise_D()))
        rho_min = float(sec.get("rho_min", 1e-3))
        rho_max = float(sec.get("rho_max", 6.0 / np.sqrt(beta)))
        theta_max = float(sec.get("theta_max", 8.0))
        n_rho = int(sec.get("n_rho", 400))
        n_theta = int(sec.get("n_theta", 400))
        if rho_min <= 0 or rho_max <= rho_min:
            raise ConfigError("grid needs 0 < rho_min < rho_max")
        return (np.linspace(rho_min, rho_max, n_rho),
                np.linspace(-theta_max, theta_max, n_theta))

    def evolve_opts(self) -> dict:
        sec = self.section("evolve")
        return {"dt": float(sec.get("dt", 2e-3)),
                "t_max": float(sec.get("t_max", 60.0)),
                "tol": float(sec.get("tol", 1e-8))}

    def echo(self) -> dict:
        return {"schema_version": self.schema_version, "source": self.path,
                "config": self.raw}


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        if p.suffix == ".json":
            raw = json.loads(p.read_text())
        else:
            with open(p, "rb") as fh:
                raw = _toml.load(fh)
    except (json.JSONDecodeError, _toml.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse {p}: {e}") from e
    return ExperimentConfig(raw, path=str(p))
