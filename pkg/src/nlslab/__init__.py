"""Numerical laboratory for semiclassical NLS soliton dynamics in a singular
radial potential: ground states, coupled classical/field evolution, modulation
diagnostics, and residual-scaling experiments."""

from .classical import (ClassicalTrajectory, PhasePoint,
                        SingularityApproachError, action_phase,
                        angular_momentum, hamiltonian, integrate, verlet_step)
from .config import (ExperimentConfig, apply_overrides, load_config,
                     parse_config_text)
from .grids import GridError, GridSpec, WaveField, l2_mass
from .groundstate import (GroundStateError, GroundStateSolution, RadialProfile,
                          closed_form_profile, euler_lagrange_residual,
                          fit_decay_rate, profile_energy, solve_ground_state)
from .harness import (RunResult, ScalingReport, coupled_pairs, fit_power_law,
                      load_or_solve_ground_state, run_coupled_scaling,
                      run_epsilon_scaling, run_single)
from .modulation import (FrameError, MassMismatchError, SolitonFit,
                         comoving_frame, fit_modulation)
from .observables import (EnergySplit, EtaDiagnostics, ObservableRow,
                          StoppingReport, compute_row, energy_split,
                          eta_diagnostics, h1eps_distance_sq, h1eps_norm_sq,
                          make_context, mass_centroid, momentum,
                          origin_cutoff_radii, radial_cutoff_ascending,
                          radial_cutoff_descending, smoothstep_c3,
                          stopping_time_monitor)
from .potential import (HypothesisReport, PhiEstimate, PotentialDomainError,
                        PotentialModel, check_hypotheses, delta_level,
                        phi_of_delta, singular_integrability_tail)
from .snapshots import SnapshotFormatError, read_snapshot, write_snapshot
from .solver import (BlowUpError, ConfigurationError, SolverConfig,
                     build_initial_datum, check_phase_step, evolve,
                     sample_ansatz, strang_step)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
