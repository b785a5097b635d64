"""Truncated operator algebra, Holstein-Primakoff map and spin coherent states.

All matrices live in the Fock ordering n = 0, ..., N-1. The Holstein-Primakoff
(HP) map identifies Fock level n with the spin-j state m = n - j, so the
bosonic vacuum sits at the south pole |j, -j> and thermal relaxation drives
the Husimi function towards theta = pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .params import PhysicalParams

REPRESENTATIONS = ("hp", "fock")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpinBasis:
    """Dimension N = 2j + 1 of the truncated space."""

    dimension: int

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.dimension}")
        object.__setattr__(self, "dimension", int(self.dimension))

    @classmethod
    def from_spin(cls, j: float) -> "SpinBasis":
        if 2 * j != int(2 * j):
            raise ValueError(f"spin must be a half-integer, got {j}")
        return cls(int(2 * j) + 1)

    @property
    def j(self) -> float:
        return (self.dimension - 1) / 2

    @property
    def m_values(self) -> np.ndarray:
        """Jz eigenvalue of each Fock index, -j ... +j."""
        return np.arange(self.dimension) - self.j


def build_ladder(basis: SpinBasis) -> tuple[np.ndarray, np.ndarray]:
    """Truncated Fock annihilation and creation operators."""
    n = np.arange(1, basis.dimension)
    a = np.diag(np.sqrt(n).astype(complex), k=1)
    return a, a.conj().T.copy()


def build_angular_momentum(basis: SpinBasis):
    """Spin-j matrices (Jx, Jy, Jz, J2) with Jz = diag(-j, ..., j)."""
    j = basis.j
    m = basis.m_values
    # <m+1|J+|m> = sqrt((j - m)(j + m + 1))
    jplus = np.diag(np.sqrt((j - m[:-1]) * (j + m[:-1] + 1)).astype(complex), k=-1)
    jminus = jplus.conj().T
    jx = (jplus + jminus) / 2
    jy = (jplus - jminus) / 2j
    jz = np.diag(m.astype(complex))
    j2 = jx @ jx + jy @ jy + jz @ jz
    return jx, jy, jz, j2


@dataclass(frozen=True)
class HPCorrespondence:
    """Bijection n <-> m = n - j and the exact HP matrix realisation."""

    basis: SpinBasis
    m_of_n: np.ndarray
    jz: np.ndarray
    jplus: np.ndarray
    jminus: np.ndarray

    def n_of_m(self, m: float) -> int:
        n = m + self.basis.j
        if n != int(n) or not 0 <= n < self.basis.dimension:
            raise ValueError(f"m = {m} is not a valid projection for j = {self.basis.j}")
        return int(n)


def hp_correspondence(basis: SpinBasis) -> HPCorrespondence:
    """Exact HP map: J+ = a_dag sqrt(2j - a_dag a), Jz = a_dag a - j."""
    a, a_dag = build_ladder(basis)
    number = (a_dag @ a).real.diagonal()
    root = np.diag(np.sqrt(np.clip(2 * basis.j - number, 0.0, None)).astype(complex))
    jplus = a_dag @ root
    jminus = root @ a
    jz = np.diag((number - basis.j).astype(complex))
    return HPCorrespondence(basis, basis.m_values, jz, jplus, jminus)


def _check_angles(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(theta < 0) or np.any(theta > np.pi):
        raise ValueError("theta must lie in [0, pi]")
    if np.any(phi < 0) or np.any(phi >= 2 * np.pi):
        raise ValueError("phi must lie in [0, 2 pi)")
    return theta, phi


class _Rotations:
    """Diagonalised Jy so that exp(-i theta Jy) is cheap for many angles."""

    def __init__(self, basis: SpinBasis):
        jx, jy, jz, _ = build_angular_momentum(basis)
        self.jy = jy
        self.m = basis.m_values
        self.evals, self.evecs = np.linalg.eigh(jy)
        top = np.zeros(basis.dimension, dtype=complex)
        top[-1] = 1.0
        # components of |j, j> in the Jy eigenbasis
        self.top_in_y = self.evecs.conj().T @ top

    def states(self, theta: np.ndarray, phi: np.ndarray, derivative: bool = False):
        """Coherent vectors |theta, phi>, shape theta.shape + (N,)."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        phases = np.exp(-1j * theta[..., None] * self.evals) * self.top_in_y
        rotated = phases @ self.evecs.T
        zphase = np.exp(-1j * phi[..., None] * self.m)
        vec = zphase * rotated
        if not derivative:
            return vec
        # d/dtheta acts inside: exp(-i phi Jz) (-i Jy) exp(-i theta Jy)|j,j>
        dvec = zphase * ((-1j * phases * self.evals) @ self.evecs.T)
        return vec, dvec


def spin_coherent_state(basis: SpinBasis, theta: float, phi: float) -> np.ndarray:
    """exp(-i phi Jz) exp(-i theta Jy) |j, j> as a normalised N-vector."""
    theta, phi = _check_angles(theta, phi)
    return _Rotations(basis).states(theta, phi)


def coherent_state_table(basis: SpinBasis, theta, phi, derivative: bool = False):
    """Vectorised coherent states (and optionally their theta-derivatives)."""
    theta, phi = _check_angles(theta, phi)
    return _Rotations(basis).states(theta, phi, derivative=derivative)


def spin_channel_rates(params: PhysicalParams, basis: SpinBasis,
                       gamma: float | None = None) -> tuple[float, float]:
    """Coefficients of -[Jx,[Jx,.]] and of the J-/J+ thermal dissipator.

    With x = s Jx, s = 2 x_zpf / sqrt(2j), the localisation term becomes
    lam s^2 on Jx; a = J-/sqrt(2j) turns gamma into gamma / 2j.
    """
    gamma = params.gamma if gamma is None else gamma
    s2 = 4 * params.x_zpf**2 / (2 * basis.j)
    return params.lam * s2, gamma / (2 * basis.j)


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Operators of one run.

    ``representation="hp"`` realises the ladder as a = J-/sqrt(2j), so that
    position is proportional to Jx and the thermal jump operators are spin
    lowering/raising operators. ``"fock"`` uses the bare truncated ladder.
    The number operator is a_dag a in Fock and Jz + j (its exact HP image)
    in the HP representation; the harmonic part of every Hamiltonian is
    hbar omega (number + 1/2).
    """

    basis: SpinBasis
    params: PhysicalParams
    representation: str
    a: np.ndarray
    a_dag: np.ndarray
    x: np.ndarray
    p: np.ndarray
    Jx: np.ndarray
    Jy: np.ndarray
    Jz: np.ndarray
    J2: np.ndarray
    number: np.ndarray
    _x_eig: tuple = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def jx_scale(self) -> float:
        """s in x = s Jx (exact for "hp", leading HP order for "fock")."""
        return 2 * self.params.x_zpf / math.sqrt(2 * self.basis.j)

    def spin_channel_rates(self, params: PhysicalParams | None = None) -> tuple[float, float]:
        return spin_channel_rates(params or self.params, self.basis)

    def potential(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Matrix function f(x) through the cached eigendecomposition of x."""
        evals, evecs = self._x_eig
        return (evecs * f(evals)) @ evecs.conj().T

    def harmonic(self, params: PhysicalParams | None = None) -> np.ndarray:
        params = params or self.params
        return params.hbar * params.omega * (self.number + 0.5 * np.eye(self.dimension))

    def parity(self) -> np.ndarray:
        """(-1)^n, mapping x -> -x and p -> -p in both representations."""
        return np.diag((-1.0) ** np.arange(self.dimension)).astype(complex)

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=complex)
        v[0] = 1.0
        return v


def build_operators(basis: SpinBasis, params: PhysicalParams,
                    representation: str = "hp") -> OperatorSet:
    if representation not in REPRESENTATIONS:
        raise ValueError(f"representation must be one of {REPRESENTATIONS}")
    jx, jy, jz, j2 = build_angular_momentum(basis)
    if representation == "hp":
        hp = hp_correspondence(basis)
        root = math.sqrt(2 * basis.j)
        a, a_dag = hp.jminus / root, hp.jplus / root
        number = jz + basis.j * np.eye(basis.dimension)
    else:
        a, a_dag = build_ladder(basis)
        number = a_dag @ a
    x = params.x_zpf * (a + a_dag)
    p = 1j * params.p_zpf * (a_dag - a)
    for name, op in (("x", x), ("p", p), ("Jx", jx), ("Jy", jy), ("Jz", jz)):
        if np.abs(op - op.conj().T).max() > 1e-12:
            raise ValueError(f"{name} is not Hermitian")
    x = (x + x.conj().T) / 2
    evals, evecs = np.linalg.eigh(x)
    mats = [_frozen(np.array(m, dtype=complex)) for m in (a, a_dag, x, p, jx, jy, jz, j2, number)]
    return OperatorSet(basis, params, representation, *mats,
                       _x_eig=(_frozen(evals), _frozen(evecs)))
