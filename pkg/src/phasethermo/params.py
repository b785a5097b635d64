"""Physical parameter record shared by every stage of a run."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional


def bose_einstein(beta: float, hbar: float, omega: float) -> float:
    """Mean thermal occupation 1 / (exp(beta*hbar*omega) - 1)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return 1.0 / math.expm1(beta * hbar * omega)


@dataclass(frozen=True)
class PhysicalParams:
    """Oscillator, potential and bath parameters.

    ``energy`` and ``width`` set the Gaussian deformation of the trap,
    ``lam`` the position-localisation strength and ``gamma``/``nbar`` the
    thermal bath. When ``beta`` is given, ``nbar`` is overwritten by the
    Bose-Einstein occupation at the trap frequency.
    """

    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0
    energy: float = 5.0
    width: float = 1.0
    lam: float = 0.01
    gamma: float = 0.05
    nbar: float = 1.0
    beta: Optional[float] = None

    def __post_init__(self):
        for name in ("mass", "omega", "hbar", "width"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("energy", "lam", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.beta is not None:
            object.__setattr__(self, "nbar", bose_einstein(self.beta, self.hbar, self.omega))
        if self.nbar < 0:
            raise ValueError(f"nbar must be non-negative, got {self.nbar}")

    @property
    def x_zpf(self) -> float:
        """Zero-point position scale sqrt(hbar / 2 m omega)."""
        return math.sqrt(self.hbar / (2 * self.mass * self.omega))

    @property
    def p_zpf(self) -> float:
        return math.sqrt(self.hbar * self.mass * self.omega / 2)

    def closed(self) -> "PhysicalParams":
        """Same parameters with both dissipators switched off."""
        return replace(self, lam=0.0, gamma=0.0, beta=None)

    def with_(self, **changes) -> "PhysicalParams":
        if "nbar" in changes and "beta" not in changes:
            changes["beta"] = None
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)
