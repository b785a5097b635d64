"""Time-dependent Hamiltonians, the Lindblad generator and a fixed-step integrator."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .hilbert import OperatorSet
from .params import PhysicalParams

logger = logging.getLogger(__name__)

MODES = ("gaussian-to-double-well", "static-double-well", "tilt-controlled", "harmonic")

_T_SLACK = 1e-12


class NumericalError(RuntimeError):
    """Integration produced an unphysical state or hit a degenerate spectrum."""


class PositivityError(NumericalError):
    pass


@dataclass(frozen=True)
class TiltProfile:
    """Raised-cosine ramp up over [0, t_r], hold, symmetric ramp down.

    ``ramp_fraction`` is t_r / tau and must lie in (0, 0.5]; 0.5 gives a
    single smooth hump with no hold.
    """

    amplitude: float
    ramp_fraction: float = 0.25

    def __post_init__(self):
        if not 0 < self.ramp_fraction <= 0.5:
            raise ValueError("ramp_fraction must lie in (0, 0.5]")
        if not math.isfinite(self.amplitude):
            raise ValueError("tilt amplitude must be finite")

    def shape(self, t: float, tau: float) -> tuple[float, float]:
        """Normalised profile r(t) in [0, 1] and its time derivative."""
        tr = self.ramp_fraction * tau
        if t <= 0 or t >= tau:
            return 0.0, 0.0
        if t < tr:
            return 0.5 * (1 - math.cos(math.pi * t / tr)), 0.5 * math.pi / tr * math.sin(math.pi * t / tr)
        if t > tau - tr:
            s = tau - t
            return 0.5 * (1 - math.cos(math.pi * s / tr)), -0.5 * math.pi / tr * math.sin(math.pi * s / tr)
        return 1.0, 0.0

    def value(self, t: float, tau: float) -> float:
        return self.amplitude * self.shape(t, tau)[0]

    def rate(self, t: float, tau: float) -> float:
        return self.amplitude * self.shape(t, tau)[1]


@dataclass(frozen=True)
class PotentialSchedule:
    tau: float
    mode: str = "gaussian-to-double-well"
    c1: float = -1.5
    c2: float = 0.2
    tilt: Optional[TiltProfile] = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode in ("static-double-well", "tilt-controlled"):
            if not (self.c1 < 0 and self.c2 > 0):
                raise ValueError("double-well modes need c1 < 0 and c2 > 0")
        if self.mode == "tilt-controlled" and self.tilt is None:
            raise ValueError("tilt-controlled mode needs a tilt profile")

    def alpha(self, t: float) -> float:
        """Gaussian-to-double-well interpolation 1 - t/tau."""
        return 1.0 - t / self.tau

    def control(self, t: float) -> float:
        return self.tilt.value(t, self.tau) if self.tilt is not None else 0.0

    def control_rate(self, t: float) -> float:
        return self.tilt.rate(t, self.tau) if self.tilt is not None else 0.0

    def static(self) -> "PotentialSchedule":
        """The free double well underlying a tilt schedule."""
        return PotentialSchedule(self.tau, "static-double-well", self.c1, self.c2)


def gaussian_term(params: PhysicalParams, alpha: float, x: np.ndarray) -> np.ndarray:
    """Scalar deformation -E (alpha + (1 - alpha) x^2 / 2W^2) exp(-x^2 / 2W^2)."""
    u = x**2 / (2 * params.width**2)
    return -params.energy * (alpha + (1 - alpha) * u) * np.exp(-u)


def double_well_term(params: PhysicalParams, c1: float, c2: float, x: np.ndarray) -> np.ndarray:
    """c1 x^2 + c2 x^4 minus the harmonic part already in hbar omega (n + 1/2)."""
    return (c1 - 0.5 * params.mass * params.omega**2) * x**2 + c2 * x**4


def hamiltonian_at(params: PhysicalParams, schedule: PotentialSchedule, t: float,
                   ops: OperatorSet) -> np.ndarray:
    if not -_T_SLACK * schedule.tau <= t <= schedule.tau * (1 + _T_SLACK):
        raise ValueError(f"t = {t} outside [0, {schedule.tau}]")
    if np.abs(ops.x - ops.x.conj().T).max() > 1e-12:
        raise ValueError("position operator is not Hermitian; operator set is corrupted")
    h = ops.harmonic(params)
    if schedule.mode == "gaussian-to-double-well":
        alpha = schedule.alpha(min(max(t, 0.0), schedule.tau))
        h = h + ops.potential(lambda x: gaussian_term(params, alpha, x))
    elif schedule.mode in ("static-double-well", "tilt-controlled"):
        h = h + ops.potential(lambda x: double_well_term(params, schedule.c1, schedule.c2, x))
        if schedule.mode == "tilt-controlled":
            h = h + schedule.control(t) * ops.x
    return (h + h.conj().T) / 2


def _dissipator(o: np.ndarray, rho: np.ndarray) -> np.ndarray:
    od = o.conj().T
    odo = od @ o
    return o @ rho @ od - 0.5 * (odo @ rho + rho @ odo)


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, params: PhysicalParams,
                 ops: OperatorSet, gamma: Optional[float] = None) -> np.ndarray:
    """-(i/hbar)[H, rho] - lam [x,[x,rho]] + gamma((nbar+1) L_a + nbar L_a_dag)."""
    gamma = params.gamma if gamma is None else gamma
    out = (-1j / params.hbar) * (H @ rho - rho @ H)
    if params.lam:
        xr = ops.x @ rho - rho @ ops.x
        out -= params.lam * (ops.x @ xr - xr @ ops.x)
    if gamma:
        out += gamma * (params.nbar + 1) * _dissipator(ops.a, rho)
        if params.nbar:
            out += gamma * params.nbar * _dissipator(ops.a_dag, rho)
    return out


def liouvillian(H: np.ndarray, params: PhysicalParams, ops: OperatorSet,
                gamma: Optional[float] = None, unitary: bool = True) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    gamma = params.gamma if gamma is None else gamma
    n = H.shape[0]
    eye = np.eye(n)

    def left(a):
        return np.kron(a, eye)

    def right(a):
        return np.kron(eye, a.T)

    sup = np.zeros((n * n, n * n), dtype=complex)
    if unitary:
        sup += (-1j / params.hbar) * (left(H) - right(H))
    x = ops.x
    sup -= params.lam * (left(x @ x) + right(x @ x) - 2 * np.kron(x, x.T))
    for o, rate in ((ops.a, gamma * (params.nbar + 1)), (ops.a_dag, gamma * params.nbar)):
        odo = o.conj().T @ o
        sup += rate * (np.kron(o, o.conj()) - 0.5 * left(odo) - 0.5 * right(odo))
    return sup


def steady_state(H: np.ndarray, params: PhysicalParams, ops: OperatorSet,
                 unitary: bool = True) -> np.ndarray:
    """Null vector of the Liouvillian, normalised to a density matrix."""
    sup = liouvillian(H, params, ops, unitary=unitary)
    n = H.shape[0]
    # replace one equation by the trace condition
    sup[0, :] = np.eye(n).reshape(-1)
    rhs = np.zeros(n * n, dtype=complex)
    rhs[0] = 1.0
    rho = np.linalg.solve(sup, rhs).reshape(n, n)
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def gibbs_state(H: np.ndarray, beta: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(H)
    w = np.exp(-beta * (evals - evals.min()))
    rho = (evecs * (w / w.sum())) @ evecs.conj().T
    return (rho + rho.conj().T) / 2


def pure(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray, atol: float = 1e-10, eig_tol: float = 1e-8) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and positive."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > atol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real}, expected 1")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lo < -eig_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")


@dataclass
class Trajectory:
    """States sampled on a uniform grid t_k = k * dt_store, t_0 = 0, t_last = tau."""

    times: np.ndarray
    states: np.ndarray
    params: PhysicalParams
    schedule: PotentialSchedule
    ops: OperatorSet
    dt: float
    stride: int
    hamiltonian: Callable[[float], np.ndarray]
    gamma_at: Callable[[float], float]
    rate_norms: np.ndarray
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def dt_store(self) -> float:
        return self.dt * self.stride

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def generator(self, k: int) -> np.ndarray:
        t = self.times[k]
        return lindblad_rhs(self.states[k], self.hamiltonian(t), self.params, self.ops,
                            gamma=self.gamma_at(t))

    def expectation(self, op: np.ndarray) -> np.ndarray:
        return np.einsum("kij,ji->k", self.states, op).real


def evolve(rho0: np.ndarray, params: PhysicalParams, schedule: PotentialSchedule,
           ops: OperatorSet, steps: int, stride: int = 1,
           hamiltonian: Optional[Callable[[float], np.ndarray]] = None,
           gamma: Optional[Callable[[float], float]] = None,
           positivity_tol: float = 1e-6) -> Trajectory:
    """Classical RK4 with dt = tau / steps, storing every ``stride``-th state.

    Each step is re-Hermitised and trace-renormalised; the largest applied
    corrections are kept in ``Trajectory.stats``. ``hamiltonian`` and
    ``gamma`` override the schedule Hamiltonian and the constant bath
    coupling (used by the protocols for counter-diabatic terms and cooling).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if stride < 1 or steps % stride:
        raise ValueError(f"stride {stride} must divide steps {steps}")
    check_density(rho0)
    if hamiltonian is None:
        def hamiltonian(t):
            return hamiltonian_at(params, schedule, t, ops)
    if gamma is None:
        def gamma(t):
            return params.gamma

    def rhs(t, rho):
        return lindblad_rhs(rho, hamiltonian(t), params, ops, gamma=gamma(t))

    dt = schedule.tau / steps
    n_store = steps // stride + 1
    states = np.empty((n_store,) + rho0.shape, dtype=complex)
    rate_norms = np.empty(n_store)
    rho = np.array(rho0, dtype=complex)
    states[0] = rho
    rate_norms[0] = np.abs(np.linalg.eigvalsh(_herm(rhs(0.0, rho)))).max()
    herm_max = trace_max = 0.0
    min_eig = np.linalg.eigvalsh(rho).min()

    for k in range(steps):
        t = k * dt
        k1 = rhs(t, rho)
        k2 = rhs(t + dt / 2, rho + dt / 2 * k1)
        k3 = rhs(t + dt / 2, rho + dt / 2 * k2)
        k4 = rhs(t + dt, rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        herm_max = max(herm_max, np.abs(rho - rho.conj().T).max())
        rho = _herm(rho)
        tr = np.trace(rho).real
        trace_max = max(trace_max, abs(tr - 1))
        rho /= tr
        if (k + 1) % stride == 0:
            i = (k + 1) // stride
            lo = np.linalg.eigvalsh(rho).min()
            min_eig = min(min_eig, lo)
            if lo < -positivity_tol:
                raise PositivityError(
                    f"eigenvalue {lo:.3e} at t = {(k + 1) * dt:.6g} (step {k + 1}); "
                    f"dt = {dt:.3e} is too large for this generator, try more steps")
            states[i] = rho
            t_next = min((k + 1) * dt, schedule.tau)
            rate_norms[i] = np.abs(np.linalg.eigvalsh(_herm(rhs(t_next, rho)))).max()

    if herm_max > 1e-9 or trace_max > 1e-9:
        logger.warning("re-Hermitisation %.2e, trace renormalisation %.2e", herm_max, trace_max)
    times = np.arange(n_store) * dt * stride
    times[-1] = schedule.tau
    stats = {"max_hermiticity_defect": float(herm_max), "max_trace_drift": float(trace_max),
             "min_eigenvalue": float(min_eig)}
    return Trajectory(times, states, params, schedule, ops, dt, stride, hamiltonian, gamma,
                      rate_norms, stats)


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2
