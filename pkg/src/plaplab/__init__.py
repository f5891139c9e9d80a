"""plaplab: numerical laboratory for the slow-diffusion evolutionary p-Laplace equation.

Grids and exact solutions, a monotone implicit solver for the evolution and
its rescaled flow, elliptic solvers for the barrier and the positive steady
profile, and scripted experiments with pass/fail reports.
"""

from .elliptic import (EllipticConfig, giant_residual, solve_barrier, solve_giant,
                       solve_p_harmonic, TrivialSolutionError)
from .exact import (BarenblattParams, PlateauBump, SeparableSolution,
                    barenblatt_eval, barenblatt_front_radius, barenblatt_mass,
                    dirac_trace_test, integrate_midpoint, pde_residual,
                    separable_eval, separable_field)
from .experiments import (EXPERIMENTS, ExperimentReport, run_barenblatt_convergence,
                          run_by_name, run_dirac_trace, run_giant_study, run_minorant,
                          run_propagation, run_property_suite, run_slanted, write_report)
from .grids import (Grid, HalfBallPartition, MediumParams, ScalarField, SlantedDomain,
                    build_grid, build_slanted_domain, field_from_json, field_mass,
                    field_to_csv, field_to_json, norm_l1, norm_linf, partition_half_ball)
from .parabolic import (BoundaryCondition, NewtonConvergenceError, SolveConfig,
                        SolverError, Trajectory, flux_coefficient, rescaled_step,
                        solve, solve_slanted, step)

__version__ = "0.1.0"
