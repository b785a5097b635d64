"""Double-well state transfer: tilt control, counter-diabatic driving and the speed limit."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .dynamics import (NumericalError, PotentialSchedule, TiltProfile, Trajectory,
                       double_well_term, evolve, hamiltonian_at, pure)
from .hilbert import OperatorSet
from .measures import bures_angle
from .params import PhysicalParams

logger = logging.getLogger(__name__)

KINDS = ("classical-tilt", "classical-tilt-with-cooling", "quantum-sta")
QSL_BOUND = "bures-angle/average-operator-norm"


class DegenerateCrossingError(NumericalError):
    pass


@dataclass(frozen=True)
class ProtocolSpec:
    """One state-transfer protocol on the double well c1 x^2 + c2 x^4.

    ``amplitude=None`` picks a default: 1.5 times the tilt that removes the
    right-hand minimum for the classical kinds, and the tilt whose extra
    doublet phase equals pi for ``quantum-sta``. Cooling raises gamma to
    ``gamma_cool`` over the first ``cool_fraction`` of the hold segment.
    """

    kind: str
    tau: float
    c1: float = -1.5
    c2: float = 0.2
    amplitude: Optional[float] = None
    ramp_fraction: float = 0.25
    gamma_cool: float = 0.5
    cool_fraction: float = 1.0
    g_min: float = 1e-8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not (self.c1 < 0 and self.c2 > 0):
            raise ValueError("double well needs c1 < 0 and c2 > 0")
        if not 0 < self.ramp_fraction <= 0.5:
            raise ValueError("ramp_fraction must lie in (0, 0.5]")
        if self.kind == "classical-tilt-with-cooling":
            if self.gamma_cool < 0 or not 0 < self.cool_fraction <= 1:
                raise ValueError("cooling needs gamma_cool >= 0 and cool_fraction in (0, 1]")
            if self.ramp_fraction == 0.5:
                raise ValueError("cooling needs a hold segment (ramp_fraction < 0.5)")

    def schedule(self, amplitude: float) -> PotentialSchedule:
        return PotentialSchedule(self.tau, "tilt-controlled", self.c1, self.c2,
                                 TiltProfile(amplitude, self.ramp_fraction))

    def free_schedule(self) -> PotentialSchedule:
        return PotentialSchedule(self.tau, "static-double-well", self.c1, self.c2)

    def cooling_window(self) -> tuple[float, float]:
        start = self.ramp_fraction * self.tau
        hold = self.tau * (1 - 2 * self.ramp_fraction)
        return start, start + self.cool_fraction * hold


def double_well_hamiltonian(params: PhysicalParams, c1: float, c2: float,
                            ops: OperatorSet) -> np.ndarray:
    """p^2/2m + c1 x^2 + c2 x^4 (harmonic part through the number operator)."""
    if not (c1 < 0 and c2 > 0):
        raise ValueError(f"double well needs c1 < 0 and c2 > 0, got c1={c1}, c2={c2}")
    h = ops.harmonic(params) + ops.potential(lambda x: double_well_term(params, c1, c2, x))
    return (h + h.conj().T) / 2


def tilt_hamiltonian(base: np.ndarray, alpha_c: float, ops: OperatorSet) -> np.ndarray:
    if not math.isfinite(alpha_c):
        raise ValueError("tilt must be finite")
    if alpha_c == 0:
        return base.copy()
    return base + alpha_c * ops.x


def critical_tilt(c1: float, c2: float) -> float:
    """Tilt at which the x > 0 minimum of c1 x^2 + c2 x^4 + alpha x disappears."""
    x = math.sqrt(-c1 / (6 * c2))
    return -2 * c1 * x - 4 * c2 * x**3


@dataclass
class EigenDecomposition:
    t: float
    energies: np.ndarray
    vectors: np.ndarray
    min_gap: float


def eigen_decomposition(H: np.ndarray, t: float = 0.0) -> EigenDecomposition:
    """Ascending spectrum; each eigenvector's largest component made real positive."""
    evals, evecs = np.linalg.eigh(H)
    idx = np.argmax(np.abs(evecs), axis=0)
    lead = evecs[idx, np.arange(evecs.shape[1])]
    evecs = evecs * (np.abs(lead) / lead)
    gap = float(np.min(np.diff(evals))) if len(evals) > 1 else math.inf
    return EigenDecomposition(t, evals, evecs, gap)


def track_eigenbasis(hamiltonian: Callable[[float], np.ndarray], times,
                     strict: bool = True) -> list[EigenDecomposition]:
    """Decompose along a schedule, aligning phases step to step.

    Raises when a level's overlap with its predecessor drops to 0.5 or below
    (an unresolved crossing) unless ``strict`` is False.
    """
    out = []
    prev = None
    for t in times:
        dec = eigen_decomposition(hamiltonian(t), t)
        if prev is not None:
            overlaps = np.einsum("ik,ik->k", prev.vectors.conj(), dec.vectors)
            # continuous gauge: rotate each vector to positive overlap with its predecessor
            dec.vectors = dec.vectors * (np.abs(overlaps) / np.where(overlaps == 0, 1, overlaps)).conj()
            bad = np.flatnonzero(np.abs(overlaps) <= 0.5)
            if bad.size and strict:
                raise NumericalError(f"eigenvector continuity lost for levels {bad.tolist()} at t = {t}")
        out.append(dec)
        prev = dec
    return out


def sta_hamiltonian(H0_at: Callable[[float], np.ndarray], t: float, dt: float,
                    hbar: float = 1.0, dH0: Optional[np.ndarray] = None,
                    g_min: float = 1e-8, bounds: Optional[tuple[float, float]] = None) -> np.ndarray:
    """Counter-diabatic term i hbar sum_{i!=j} <i|dH0|j> / (E_j - E_i) |i><j|.

    ``dH0`` is the analytic time derivative when known; otherwise a central
    difference with step ``dt`` is used (one-sided at ``bounds``).
    """
    H0 = H0_at(t)
    if dH0 is None:
        lo, hi = bounds if bounds is not None else (-math.inf, math.inf)
        tm, tp = max(t - dt, lo), min(t + dt, hi)
        dH0 = (H0_at(tp) - H0_at(tm)) / (tp - tm)
    if not np.any(dH0):
        return np.zeros_like(H0, dtype=complex)
    evals, evecs = np.linalg.eigh(H0)
    gaps = evals[None, :] - evals[:, None]  # E_j - E_i
    n = len(evals)
    off = ~np.eye(n, dtype=bool)
    small = off & (np.abs(gaps) < g_min)
    if small.any():
        i, j = np.argwhere(small)[0]
        raise DegenerateCrossingError(
            f"levels {i} and {j} are closer than g_min = {g_min:g} at t = {t:.6g} "
            f"(gap {abs(gaps[i, j]):.3e})")
    m = evecs.conj().T @ dH0 @ evecs
    coeff = np.zeros_like(m)
    coeff[off] = 1j * hbar * m[off] / gaps[off]
    h = evecs @ coeff @ evecs.conj().T
    defect = float(np.abs(h - h.conj().T).max())
    if defect > 1e-10:
        logger.warning("counter-diabatic term Hermiticity defect %.2e at t = %.6g", defect, t)
    return (h + h.conj().T) / 2


def doublet_state(H_free: np.ndarray, ops: OperatorSet, side: str = "right") -> np.ndarray:
    """(|E0> +/- |E1>)/sqrt(2) with the sign that puts <x> on ``side``."""
    evals, evecs = np.linalg.eigh(H_free)
    psi = (evecs[:, 0] + evecs[:, 1]) / math.sqrt(2)
    x = np.vdot(psi, ops.x @ psi).real
    if (x > 0) != (side == "right"):
        psi = (evecs[:, 0] - evecs[:, 1]) / math.sqrt(2)
    return psi


def _doublet_phase(spec: ProtocolSpec, params: PhysicalParams, ops: OperatorSet,
                   amplitude: float, samples: int = 401) -> float:
    """Extra relative phase between the two lowest levels picked up during the tilt."""
    base = double_well_hamiltonian(params, spec.c1, spec.c2, ops)
    e = np.linalg.eigvalsh(base)
    split0 = e[1] - e[0]
    profile = TiltProfile(amplitude, spec.ramp_fraction)
    ts = np.linspace(0, spec.tau, samples)
    gaps = []
    for t in ts:
        e = np.linalg.eigvalsh(base + profile.value(t, spec.tau) * ops.x)
        gaps.append(e[1] - e[0] - split0)
    return float(simpson(gaps, x=ts)) / params.hbar


def sta_amplitude(spec: ProtocolSpec, params: PhysicalParams, ops: OperatorSet) -> float:
    """Smallest tilt whose adiabatic doublet phase is pi (right -> left swap)."""
    target = math.pi
    hi = 0.05
    while _doublet_phase(spec, params, ops, hi) < target:
        hi *= 2
        if hi > 1e3:
            raise NumericalError("no tilt amplitude reaches a pi doublet phase")
    return brentq(lambda a: _doublet_phase(spec, params, ops, a) - target, 0.0, hi, xtol=1e-12)


def resolve_amplitude(spec: ProtocolSpec, params: PhysicalParams, ops: OperatorSet) -> float:
    if spec.amplitude is not None:
        return spec.amplitude
    if spec.kind == "quantum-sta":
        return sta_amplitude(spec, params, ops)
    return 1.5 * critical_tilt(spec.c1, spec.c2)


@dataclass
class ProtocolRun:
    spec: ProtocolSpec
    amplitude: float
    trajectory: Trajectory
    initial: np.ndarray
    extras: dict = field(default_factory=dict)


def protocol_drivers(spec: ProtocolSpec, params: PhysicalParams, ops: OperatorSet,
                     amplitude: float):
    """(schedule, H(t), gamma(t)) for a protocol at a fixed tilt amplitude."""
    schedule = spec.schedule(amplitude)
    base = double_well_hamiltonian(params, spec.c1, spec.c2, ops)

    def h0(t):
        return tilt_hamiltonian(base, schedule.control(t), ops)

    if spec.kind == "quantum-sta":
        def hamiltonian(t):
            dh0 = schedule.control_rate(t) * ops.x
            return h0(t) + sta_hamiltonian(h0, t, 0.0, params.hbar, dH0=dh0, g_min=spec.g_min)
    else:
        hamiltonian = h0

    if spec.kind == "classical-tilt-with-cooling":
        start, stop = spec.cooling_window()

        def gamma(t):
            return spec.gamma_cool if start <= t < stop else params.gamma
    else:
        def gamma(t):
            return params.gamma
    return schedule, hamiltonian, gamma


def run_protocol(spec: ProtocolSpec, params: PhysicalParams, ops: OperatorSet,
                 steps: int, stride: int = 1) -> ProtocolRun:
    """Transfer the right-well doublet state to the left well."""
    amplitude = resolve_amplitude(spec, params, ops)
    schedule, hamiltonian, gamma = protocol_drivers(spec, params, ops, amplitude)
    psi0 = doublet_state(double_well_hamiltonian(params, spec.c1, spec.c2, ops), ops, "right")
    rho0 = pure(psi0)
    traj = evolve(rho0, params, schedule, ops, steps, stride=stride,
                  hamiltonian=hamiltonian, gamma=gamma)
    return ProtocolRun(spec, amplitude, traj, rho0)


def qsl_time(traj: Trajectory) -> float:
    """sin^2(Bures angle(rho_0, rho_tau)) / time-averaged operator norm of d rho/dt."""
    if len(traj) < 2:
        raise ValueError("speed limit needs at least two samples")
    angle = bures_angle(traj.states[0], traj.states[-1])
    tau = traj.times[-1] - traj.times[0]
    mean_speed = float(np.trapezoid(traj.rate_norms, traj.times)) / tau
    if angle == 0 or mean_speed == 0:
        return 0.0
    return math.sin(angle) ** 2 / mean_speed


def restored_potential_defect(spec: ProtocolSpec, params: PhysicalParams, ops: OperatorSet) -> float:
    """max |H(tau) - H_free| for a protocol (zero tilt and zero counter-diabatic term)."""
    amplitude = resolve_amplitude(spec, params, ops)
    _, hamiltonian, _ = protocol_drivers(spec, params, ops, amplitude)
    free = double_well_hamiltonian(params, spec.c1, spec.c2, ops)
    return float(np.abs(hamiltonian(spec.tau) - free).max())


def free_hamiltonian_at(spec: ProtocolSpec, params: PhysicalParams, ops: OperatorSet):
    return lambda t: hamiltonian_at(params, spec.free_schedule(), t, ops)
