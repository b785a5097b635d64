"""Husimi-Q on spin coherent states, Wehrl entropy and its production rates.

Integrals over the sphere use Gauss-Legendre nodes in cos(theta) and a
uniform grid in phi. Q and its angular derivatives come from cached
coherent-state vectors and their exact theta/phi derivatives, so no
finite differencing enters the rate integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .dynamics import Trajectory
from .hilbert import SpinBasis, coherent_state_table, spin_channel_rates
from .params import PhysicalParams

EPS_Q = 1e-14


@dataclass(frozen=True, eq=False)
class SphereGrid:
    basis: SpinBasis
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray  # (n_theta, n_phi), includes the sin(theta) measure
    states: np.ndarray   # (n_theta * n_phi, N) coherent vectors
    dstates_theta: np.ndarray
    dstates_phi: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.theta), len(self.phi)

    @property
    def theta_mesh(self) -> np.ndarray:
        return np.broadcast_to(self.theta[:, None], self.shape)

    @property
    def phi_mesh(self) -> np.ndarray:
        return np.broadcast_to(self.phi[None, :], self.shape)

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature of values(theta, phi) against dOmega."""
        return float(np.sum(self.weights * values))


def minimum_grid(basis: SpinBasis) -> tuple[int, int]:
    j2 = int(round(2 * basis.j))
    return j2 + 1, 2 * j2 + 2


def default_grid_size(basis: SpinBasis) -> tuple[int, int]:
    """Resolution at which the log and 1/Q integrands are converged."""
    n_theta, n_phi = minimum_grid(basis)
    return 3 * n_theta + 16, n_phi + 16


def build_sphere_grid(basis: SpinBasis, n_theta: Optional[int] = None,
                      n_phi: Optional[int] = None) -> SphereGrid:
    dt, dp = default_grid_size(basis)
    n_theta = dt if n_theta is None else int(n_theta)
    n_phi = dp if n_phi is None else int(n_phi)
    min_t, min_p = minimum_grid(basis)
    if n_theta < min_t or n_phi < min_p:
        raise ValueError(f"grid {n_theta}x{n_phi} too coarse for j = {basis.j}: "
                         f"need n_theta >= {min_t} and n_phi >= {min_p}")
    cos_nodes, w = np.polynomial.legendre.leggauss(n_theta)
    # ascending theta
    theta = np.arccos(cos_nodes)[::-1].copy()
    w = w[::-1].copy()
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    weights = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi))
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    vec, dvec = coherent_state_table(basis, tt.ravel(), pp.ravel(), derivative=True)
    dphi = -1j * basis.m_values * vec
    for a in (theta, phi, weights, vec, dvec, dphi):
        a.setflags(write=False)
    return SphereGrid(basis, theta, phi, weights, vec, dvec, dphi)


@dataclass(frozen=True, eq=False)
class HusimiField:
    q: np.ndarray
    dq_dtheta: np.ndarray
    dq_dphi: np.ndarray
    grid: SphereGrid
    t: float = 0.0

    def normalisation(self) -> float:
        n = self.grid.basis.dimension
        return n / (4 * np.pi) * self.grid.integrate(self.q)


def _sandwich(grid: SphereGrid, rho: np.ndarray, left: np.ndarray) -> np.ndarray:
    """<left_k| rho |Omega_k> on every node."""
    right = grid.states @ rho.T
    return np.sum(left.conj() * right, axis=1).reshape(grid.shape)


def husimi_values(rho: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Q = <Omega|rho|Omega>; rho need not be a state (linear in rho)."""
    return _sandwich(grid, rho, grid.states).real


def husimi_q(rho: np.ndarray, grid: SphereGrid, basis: Optional[SpinBasis] = None,
             t: float = 0.0) -> HusimiField:
    if basis is not None and basis.dimension != grid.basis.dimension:
        raise ValueError("grid and basis dimensions differ")
    right = grid.states @ np.asarray(rho).T
    q = np.sum(grid.states.conj() * right, axis=1).real.reshape(grid.shape)
    dth = 2 * np.sum(grid.dstates_theta.conj() * right, axis=1).real.reshape(grid.shape)
    dph = 2 * np.sum(grid.dstates_phi.conj() * right, axis=1).real.reshape(grid.shape)
    return HusimiField(q, dth, dph, grid, t)


def _entropy_density(q: np.ndarray) -> np.ndarray:
    mask = q > EPS_Q
    out = np.zeros_like(q)
    out[mask] = q[mask] * np.log(q[mask])
    return out


def wehrl_entropy(field: HusimiField, basis: Optional[SpinBasis] = None) -> float:
    """S_Q = -(N / 4 pi) integral Q ln Q dOmega."""
    n = field.grid.basis.dimension
    return -n / (4 * np.pi) * field.grid.integrate(_entropy_density(field.q))


def _inverse_q(q: np.ndarray) -> np.ndarray:
    out = np.zeros_like(q)
    mask = q > EPS_Q
    out[mask] = 1.0 / q[mask]
    return out


def jx_derivative(field: HusimiField) -> np.ndarray:
    """Real part of the phase-space Jx action: sin(phi) dQ/dtheta + cot(theta) cos(phi) dQ/dphi.

    The differential operator is i times this vector field, so |J_x(Q)|^2
    equals its square.
    """
    th, ph = field.grid.theta_mesh, field.grid.phi_mesh
    return np.sin(ph) * field.dq_dtheta + np.cos(ph) / np.tan(th) * field.dq_dphi


def localisation_rates(field: HusimiField, params: PhysicalParams,
                       basis: Optional[SpinBasis] = None,
                       grid: Optional[SphereGrid] = None) -> tuple[float, float]:
    """(Pi_lc, Phi_lc); Phi_lc is identically zero."""
    basis = basis or field.grid.basis
    lam_s, _ = spin_channel_rates(params, basis)
    if lam_s == 0:
        return 0.0, 0.0
    n = basis.dimension
    integrand = jx_derivative(field) ** 2 * _inverse_q(field.q)
    return lam_s * n / (4 * np.pi) * field.grid.integrate(integrand), 0.0


def thermal_rates(field: HusimiField, params: PhysicalParams,
                  basis: Optional[SpinBasis] = None, grid: Optional[SphereGrid] = None,
                  gamma: Optional[float] = None) -> tuple[float, float]:
    """(Pi_th, Phi_th) of the J-/J+ thermal channel at occupation nbar."""
    basis = basis or field.grid.basis
    _, gam_s = spin_channel_rates(params, basis, gamma)
    if gam_s == 0:
        return 0.0, 0.0
    j = basis.j
    a = 2 * params.nbar + 1
    th = field.grid.theta_mesh
    s, c = np.sin(th), np.cos(th)
    q, qt, qp = field.q, field.dq_dtheta, field.dq_dphi
    live = q > EPS_Q

    flux = s * (2 * j * q * s / (a - c) - qt)
    flux = np.where(live, flux, 0.0)
    phi_th = gam_s * j * (2 * j + 1) / (4 * np.pi) * field.grid.integrate(flux)

    azimuthal = qp**2 * (a * c - 1) / (np.tan(th) * s)
    polar = (2 * j * q * s + (c - a) * qt) ** 2 / (a - c)
    pi_th = gam_s * (2 * j + 1) / (8 * np.pi) * field.grid.integrate(
        (azimuthal + polar) * _inverse_q(q))
    return pi_th, phi_th


def balance(field: HusimiField, params: PhysicalParams, gamma: Optional[float] = None) -> dict:
    """Steady-state relation Pi_th + Pi_lc - Phi_th and its parts."""
    pi_lc, _ = localisation_rates(field, params)
    pi_th, phi_th = thermal_rates(field, params, gamma=gamma)
    return {"Pi_lc": pi_lc, "Pi_th": pi_th, "Phi_th": phi_th,
            "balance": pi_th + pi_lc - phi_th}


def entropy_rate_of(rho: np.ndarray, drho: np.ndarray, grid: SphereGrid) -> float:
    """Instantaneous dS_Q/dt = -(N/4 pi) integral Qdot ln Q for rho' = drho."""
    q = husimi_values(rho, grid)
    qdot = husimi_values(drho, grid)
    logq = np.where(q > EPS_Q, np.log(np.where(q > EPS_Q, q, 1.0)), 0.0)
    return -grid.basis.dimension / (4 * np.pi) * grid.integrate(qdot * logq)


@dataclass(frozen=True)
class EntropyRecord:
    t: float
    S_Q: float
    dS_dt: float
    dS_U_dt: float
    Pi_lc: float
    Phi_lc: float
    Pi_th: float
    Phi_th: float
    residual: float

    @property
    def Pi(self) -> float:
        return self.Pi_lc + self.Pi_th


def unitary_entropy_rate(rho: np.ndarray, H: np.ndarray, hbar: float, dt_u: float,
                         grid: SphereGrid) -> float:
    """dS_U/dt by a symmetric pair of short unitary-only steps of length dt_u."""
    u = expm(-1j * H * dt_u / hbar)
    fwd = u @ rho @ u.conj().T
    bwd = u.conj().T @ rho @ u
    s_f = wehrl_entropy(husimi_q(fwd, grid))
    s_b = wehrl_entropy(husimi_q(bwd, grid))
    return (s_f - s_b) / (2 * dt_u)


def _derivative(values: np.ndarray, h: float, k: int) -> float:
    n = len(values)
    if 0 < k < n - 1:
        return (values[k + 1] - values[k - 1]) / (2 * h)
    if n < 3:
        return (values[1] - values[0]) / h
    if k == 0:
        return (-3 * values[0] + 4 * values[1] - values[2]) / (2 * h)
    return (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * h)


def _record(traj: Trajectory, k: int, grid: SphereGrid, entropies: np.ndarray) -> EntropyRecord:
    t = float(traj.times[k])
    rho = traj.states[k]
    field = husimi_q(rho, grid, t=t)
    gamma = traj.gamma_at(t)
    pi_lc, phi_lc = localisation_rates(field, traj.params)
    pi_th, phi_th = thermal_rates(field, traj.params, gamma=gamma)
    ds_dt = _derivative(entropies, traj.dt_store, k)
    ds_u = unitary_entropy_rate(rho, traj.hamiltonian(t), traj.params.hbar, traj.dt / 10, grid)
    residual = abs(ds_dt - (ds_u + pi_lc + pi_th - phi_th))
    return EntropyRecord(t, float(entropies[k]), ds_dt, ds_u, pi_lc, phi_lc, pi_th, phi_th,
                         residual)


def trajectory_entropies(traj: Trajectory, grid: SphereGrid) -> np.ndarray:
    return np.array([wehrl_entropy(husimi_q(rho, grid)) for rho in traj.states])


def decompose_entropy_rate(traj: Trajectory, k: int, grid: SphereGrid,
                           basis: Optional[SpinBasis] = None,
                           params: Optional[PhysicalParams] = None) -> EntropyRecord:
    """Entropy budget at interior sample k (central differences need neighbours)."""
    if not 1 <= k <= len(traj) - 2:
        raise IndexError(f"k = {k} must lie in [1, {len(traj) - 2}]")
    window = np.array([wehrl_entropy(husimi_q(traj.states[i], grid)) for i in (k - 1, k, k + 1)])
    entropies = np.full(len(traj), np.nan)
    entropies[k - 1:k + 2] = window
    return _record(traj, k, grid, entropies)


def entropy_records(traj: Trajectory, grid: SphereGrid) -> list[EntropyRecord]:
    """Budget at every stored sample; end points use one-sided differences."""
    if len(traj) < 2:
        raise ValueError("need at least two samples")
    entropies = trajectory_entropies(traj, grid)
    return [_record(traj, k, grid, entropies) for k in range(len(traj))]


def max_rate(records) -> float:
    return max(max(r.Pi_lc, r.Pi_th, abs(r.Phi_th)) for r in records)


def lieb_minimum(basis: SpinBasis) -> float:
    """Wehrl entropy of a spin coherent state, 2j / (2j + 1)."""
    return 2 * basis.j / (2 * basis.j + 1)


def max_entropy(basis: SpinBasis) -> float:
    return math.log(basis.dimension)
