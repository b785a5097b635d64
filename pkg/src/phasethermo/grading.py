"""Protocol grading G = gS * gQ * gT."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import PotentialSchedule, Trajectory, evolve, pure
from .hilbert import OperatorSet
from .measures import fidelity
from .params import PhysicalParams
from .phasespace import EntropyRecord
from .protocols import QSL_BOUND, double_well_hamiltonian, doublet_state, qsl_time

logger = logging.getLogger(__name__)

FIDELITY_CONVENTION = "uhlmann-squared"

__all__ = ["GradingReport", "speed_score", "fidelity", "target_state", "sigma_ir", "grade",
           "params_digest"]


@dataclass(frozen=True)
class GradingReport:
    kind: str
    tau: float
    tau_qsl: float
    fidelity: float
    sigma_ir: float
    g_s: float
    g_q: float
    g_t: float
    G: float
    qsl_bound: str = QSL_BOUND
    fidelity_convention: str = FIDELITY_CONVENTION
    digest: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def speed_score(tau: float, tau_qsl: float) -> float:
    """max(0, 1 - 0.1 log10(tau / tau_qsl)); a zero bound earns no credit."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if tau_qsl < 0:
        raise ValueError(f"tau_qsl must be non-negative, got {tau_qsl}")
    if tau_qsl == 0:
        logger.info("tau_qsl = 0: speed score set to 0")
        return 0.0
    g = 1.0 - 0.1 * math.log10(tau / tau_qsl)
    if g > 1.0:
        logger.warning("tau = %.6g below tau_qsl = %.6g; speed score capped at 1", tau, tau_qsl)
        return 1.0
    return max(0.0, g)


def thermo_score(sigma: float) -> float:
    return math.exp(-sigma)


def target_state(params: PhysicalParams, schedule: PotentialSchedule, ops: OperatorSet,
                 steps: int) -> np.ndarray:
    """Left-well doublet state evolved for tau under the free double well and the same bath."""
    free = double_well_hamiltonian(params, schedule.c1, schedule.c2, ops)
    rho0 = pure(doublet_state(free, ops, "left"))
    static = PotentialSchedule(schedule.tau, "static-double-well", schedule.c1, schedule.c2)
    traj = evolve(rho0, params, static, ops, steps, stride=steps,
                  hamiltonian=lambda t: free)
    return traj.final


def sigma_ir(records: Sequence[EntropyRecord], rtol: float = 1e-9) -> float:
    """Trapezoid integral of Pi_lc + Pi_th over a uniform record grid."""
    if len(records) == 0:
        raise ValueError("no records")
    if len(records) == 1:
        return 0.0
    t = np.array([r.t for r in records])
    steps = np.diff(t)
    if np.any(steps <= 0) or np.abs(steps - steps.mean()).max() > rtol * max(steps.mean(), 1.0):
        raise ValueError("entropy records must lie on a uniform, increasing time grid")
    pi = np.array([r.Pi_lc + r.Pi_th for r in records])
    return float(np.trapezoid(pi, t))


def params_digest(*parts) -> str:
    blob = json.dumps([p if isinstance(p, (dict, list, str, int, float)) else repr(p)
                       for p in parts], sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def combine(g_s: float, g_q: float, g_t: float) -> float:
    return g_s * g_q * g_t


def grade(traj: Trajectory, records: Sequence[EntropyRecord], target: np.ndarray,
          kind: str = "", digest: Optional[str] = None) -> GradingReport:
    tau = float(traj.times[-1] - traj.times[0])
    tau_qsl = qsl_time(traj)
    f = fidelity(traj.final, target)
    sigma = sigma_ir(records)
    if sigma < 0:
        logger.warning("negative irreversible entropy %.3e", sigma)
    g_s = speed_score(tau, tau_qsl)
    g_t = thermo_score(max(sigma, 0.0))
    digest = digest if digest is not None else params_digest(traj.params.to_dict(), repr(traj.schedule))
    return GradingReport(kind, tau, tau_qsl, f, sigma, g_s, f, g_t, combine(g_s, f, g_t),
                         digest=digest)
