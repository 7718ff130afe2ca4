"""schoolsim: stochastic swarm dynamics with attraction-repulsion and alignment.

N particles in d dimensions couple through a radial attraction-repulsion
force (zero at the critical radius r) and a velocity-alignment force, with
independent Brownian noise on positions.  The package provides the force
kernels, deterministic and stochastic integrators, the exact two-particle
reduction with Lyapunov monitors, trajectory diagnostics, and a scenario
harness with a CLI.
"""

from .model import (ExternalForceSpec, ModelParams, SwarmState, ValidationReport,
                    default_min_separation, derive_params, external_force, validate_state)
from .forces import DriftEval, SingularForceError, drift, pair_position_force, pair_velocity_force
from .integrators import (IntegratorConfig, Termination, Trajectory, brownian_increment,
                          init_stream, particle_streams, simulate, step_euler,
                          step_euler_maruyama, step_rk4)
from .reduced import (LyapunovConfig, ReducedPath, ReducedState, admissible_theta_interval,
                      cauchy_schwarz_defect, default_lyapunov_config, envelope_rate,
                      exponential_bound_rate, first_exit_time, fit_growth_rate,
                      integrate_reduced, lyapunov_h, lyapunov_h_values, lyapunov_v,
                      lyapunov_v_values, reduce_pair, reduce_trajectory, reduced_drift_det,
                      reduced_drift_stoch, theta_admissible, theta_feasible)
from .diagnostics import (Classification, StateDiagnostics, classify, default_schooling_bound,
                          diagnose, pair_equilibrium_distance)
from .output import (emit_diagnostics_csv, emit_snapshot_blocks, emit_trajectory_csv,
                     read_trajectory_csv)
from .scenarios import (RunRecord, ScenarioSpec, SweepSpec, apply_overrides, builtin_scenarios,
                        classification_fractions, draw_initial_state, get_scenario,
                        load_scenario, run, run_replicates, save_scenario, scenario_names,
                        sweep_runs)

__version__ = "0.1.0"
