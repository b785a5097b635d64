"""Open-system dynamics in a deforming trap, Wehrl-entropy thermodynamics and
grading of double-well state-transfer protocols."""

__version__ = "0.1.0"

from .params import PhysicalParams
from .hilbert import SpinBasis, OperatorSet, build_operators, spin_coherent_state
from .dynamics import PotentialSchedule, TiltProfile, Trajectory, evolve, hamiltonian_at, lindblad_rhs
from .phasespace import (SphereGrid, HusimiField, EntropyRecord, build_sphere_grid, husimi_q,
                         wehrl_entropy, localisation_rates, thermal_rates, entropy_records)
from .protocols import ProtocolSpec, run_protocol, qsl_time
from .grading import GradingReport, grade, fidelity, speed_score, sigma_ir, target_state
