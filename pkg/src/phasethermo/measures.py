"""State distances used by the speed limit and the grading."""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


def _psd_sqrt(a: np.ndarray) -> tuple[np.ndarray, float]:
    evals, evecs = np.linalg.eigh((a + a.conj().T) / 2)
    clamp = float(max(0.0, -evals.min()))
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    return root, clamp


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1].

    Computed as the squared nuclear norm of sqrt(rho) sqrt(sigma), which stays
    accurate for rank-deficient (e.g. pure) states.
    """
    root_r, c1 = _psd_sqrt(rho)
    root_s, c2 = _psd_sqrt(sigma)
    if max(c1, c2) > 1e-10:
        logger.info("fidelity clamped negative eigenvalues of magnitude %.2e", max(c1, c2))
    f = float(np.sum(np.linalg.svd(root_r @ root_s, compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


def bures_angle(rho: np.ndarray, sigma: np.ndarray) -> float:
    return float(np.arccos(np.sqrt(fidelity(rho, sigma))))
