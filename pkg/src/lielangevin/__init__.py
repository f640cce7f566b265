"""Stochastic geodesic and Langevin dynamics on Lie algebras.

Deterministic geodesic/dissipative flows, Langevin ensemble simulation and
a Fokker-Planck solver for the velocity distribution, specialized to the
affine (hyperboloid) algebra where the flat Boltzmann density fails to be
normalizable against the invariant measure.
"""

from .algebra import (LieAlgebra, ModelParams, HamiltonianKind, abelian, affine2,
                      so3, direct_sum, from_entries, trace_vector, is_unimodular,
                      poisson_bracket, geodesic_field, divergence_of_field, energy)
from .coords import (PolarVelocity, to_cartesian, to_polar, measure_mu,
                     measure_mu_polar, jacobian_polar_to_cartesian, poincare_metric)
from .dynamics import (Trajectory, geodesic_closed_form, dissipative_closed_form,
                       integrate_ode, energy_decay_check)
from .sde import (NoiseModel, EnsembleConfig, EnsembleResult, Scheme,
                  step_cartesian_naive, step_polar_fpk, run_ensemble)
from .fpk import DensityGrid, FPKOperator, default_grid, gaussian_bump
from .specfun import (erf, kummer_M, tricomi_U, RadialBranch, radial_solution,
                      radial_residual, angular_ode_residual, solve_angular_eigen,
                      AngularEigenpair)
from .equilibrium import (CandidateEquilibrium, boltzmann_candidate, paper_candidate,
                          pde_equilibrium, find_mode, compare_density_to_samples)
from .stats import Histogram2D, bin_samples, total_variation, chi_square_test

__version__ = "0.1.0"
