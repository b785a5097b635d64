import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasethermo.dynamics import (PotentialSchedule, evolve, hamiltonian_at, lindblad_rhs, pure,
                                  steady_state)
from phasethermo.hilbert import SpinBasis, build_operators, spin_coherent_state
from phasethermo.params import PhysicalParams
from phasethermo.phasespace import (build_sphere_grid, decompose_entropy_rate, entropy_rate_of,
                                    entropy_records, husimi_q, husimi_values, lieb_minimum,
                                    localisation_rates, max_entropy, max_rate, minimum_grid,
                                    thermal_rates, unitary_entropy_rate, wehrl_entropy)

from conftest import random_density, random_pure

BASIS = SpinBasis(25)
GRID = build_sphere_grid(BASIS)
SMALL = SpinBasis(7)
SMALL_GRID = build_sphere_grid(SMALL)


def test_grid_minimum_enforced():
    t, p = minimum_grid(BASIS)
    assert (t, p) == (25, 50)
    with pytest.raises(ValueError):
        build_sphere_grid(BASIS, t - 1, p)
    build_sphere_grid(BASIS, t, p)


def test_grid_weights_integrate_sphere():
    assert GRID.integrate(np.ones(GRID.shape)) == pytest.approx(4 * np.pi, rel=1e-13)
    assert GRID.integrate(np.cos(GRID.theta_mesh) ** 2) == pytest.approx(4 * np.pi / 3, rel=1e-13)
    assert np.all(np.diff(GRID.theta) > 0)


def test_north_pole_q_closed_form():
    psi = spin_coherent_state(BASIS, 0.0, 0.0)
    q = husimi_values(pure(psi), GRID)
    np.testing.assert_allclose(q, np.cos(GRID.theta_mesh / 2) ** 48, atol=1e-13)
    # integral of cos^(4j)(theta/2) over the sphere is 4 pi / N
    assert GRID.integrate(q) == pytest.approx(4 * np.pi / 25, rel=1e-12)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_q_normalised_and_bounded(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(25, rng, rank=int(rng.integers(1, 26)))
    field = husimi_q(rho, GRID)
    assert field.normalisation() == pytest.approx(1.0, abs=1e-12)
    assert field.q.min() >= -1e-14 and field.q.max() <= 1 + 1e-12


def test_q_derivatives_against_finite_differences(rng):
    rho = random_density(7, rng)
    field = husimi_q(rho, SMALL_GRID)
    h = 1e-5
    for i in (3, 8, 20):
        for k in (0, 5, 11):
            th, ph = SMALL_GRID.theta[i], SMALL_GRID.phi[k]

            def q(a, b):
                v = spin_coherent_state(SMALL, a, b % (2 * np.pi))
                return np.vdot(v, rho @ v).real

            fd_t = (q(th + h, ph) - q(th - h, ph)) / (2 * h)
            fd_p = (q(th, ph + h) - q(th, ph - h + 2 * np.pi)) / (2 * h)
            assert field.dq_dtheta[i, k] == pytest.approx(fd_t, abs=1e-8)
            assert field.dq_dphi[i, k] == pytest.approx(fd_p, abs=1e-8)


def test_phi_derivative_matches_fft(rng):
    field = husimi_q(random_density(7, rng), SMALL_GRID)
    n = SMALL_GRID.shape[1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    spectral = np.fft.ifft(1j * k * np.fft.fft(field.q, axis=1), axis=1).real
    np.testing.assert_allclose(field.dq_dphi, spectral, atol=1e-12)


def test_basis_mismatch_rejected():
    with pytest.raises(ValueError):
        husimi_q(np.eye(25) / 25, GRID, basis=SMALL)


# ---- Wehrl entropy -----------------------------------------------------------

def test_wehrl_maximally_mixed():
    assert wehrl_entropy(husimi_q(np.eye(25) / 25, GRID)) == pytest.approx(math.log(25), abs=1e-12)
    assert max_entropy(BASIS) == math.log(25)


@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi, exclude_max=True))
@settings(max_examples=20, deadline=None)
def test_wehrl_coherent_state_is_lieb_minimum(theta, phi):
    rho = pure(spin_coherent_state(BASIS, theta, phi))
    assert wehrl_entropy(husimi_q(rho, GRID)) == pytest.approx(lieb_minimum(BASIS), abs=1e-6)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_wehrl_bounds(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(25, rng, rank=int(rng.integers(1, 4)))
    s = wehrl_entropy(husimi_q(rho, GRID))
    assert lieb_minimum(BASIS) - 1e-9 <= s <= math.log(25) + 1e-9


@pytest.mark.parametrize("which", ["coherent", "mixed", "random"])
def test_wehrl_converged_under_grid_refinement(which, rng):
    if which == "coherent":
        rho, tol = pure(spin_coherent_state(BASIS, 1.0, 2.0)), 1e-8
    elif which == "mixed":
        rho, tol = np.eye(25) / 25, 1e-8
    else:
        # the 2j zeros of Q make Q ln Q non-smooth there, so convergence is slower
        rho, tol = pure(random_pure(25, rng)), 1e-5
    t, p = GRID.shape
    fine = build_sphere_grid(BASIS, 2 * t, 2 * p)
    a = wehrl_entropy(husimi_q(rho, GRID))
    b = wehrl_entropy(husimi_q(rho, fine))
    assert abs(a - b) / abs(b) < tol


# ---- production rates --------------------------------------------------------

@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_localisation_rate_nonnegative(seed):
    rng = np.random.default_rng(seed)
    params = PhysicalParams()
    pi, phi = localisation_rates(husimi_q(random_density(25, rng), GRID), params)
    assert phi == 0.0 and pi >= 0


@pytest.mark.parametrize("nbar", [0.0, 0.5, 2.0])
def test_thermal_rates_nonnegative(nbar, rng):
    params = PhysicalParams(nbar=nbar)
    for _ in range(5):
        pi, _ = thermal_rates(husimi_q(random_density(25, rng), GRID), params)
        assert pi >= 0


@pytest.mark.parametrize("seed", range(4))
def test_localisation_rate_is_entropy_rate_of_dephasing(seed):
    rng = np.random.default_rng(seed)
    params = PhysicalParams(lam=0.03, gamma=0.0)
    ops = build_operators(BASIS, params)
    rho = random_density(25, rng)
    drho = lindblad_rhs(rho, np.zeros((25, 25)), params, ops)
    pi, _ = localisation_rates(husimi_q(rho, GRID), params)
    assert entropy_rate_of(rho, drho, GRID) == pytest.approx(pi, rel=1e-8)


@pytest.mark.parametrize("nbar", [0.0, 0.3, 1.7])
def test_thermal_rates_are_entropy_rate_of_bath(nbar, rng):
    params = PhysicalParams(lam=0.0, gamma=0.2, nbar=nbar)
    ops = build_operators(BASIS, params)
    rho = random_density(25, rng)
    drho = lindblad_rhs(rho, np.zeros((25, 25)), params, ops)
    pi, phi = thermal_rates(husimi_q(rho, GRID), params)
    assert entropy_rate_of(rho, drho, GRID) == pytest.approx(pi - phi, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("nbar", [0.0, 0.5, 1.0, 3.0])
def test_thermal_rates_vanish_at_bath_fixed_point(nbar):
    params = PhysicalParams(lam=0.0, gamma=0.05, nbar=nbar)
    ops = build_operators(BASIS, params)
    rho = steady_state(np.zeros((25, 25)), params, ops, unitary=False)
    pi, phi = thermal_rates(husimi_q(rho, GRID), params)
    assert abs(pi) <= 1e-6 and abs(phi) <= 1e-6


def test_rotation_about_z_leaves_entropy(rng):
    ops = build_operators(BASIS, PhysicalParams())
    rho = random_density(25, rng)
    assert abs(unitary_entropy_rate(rho, ops.Jz, 1.0, 1e-3, GRID)) < 1e-10
    drho = -1j * (ops.Jz @ rho - rho @ ops.Jz)
    assert abs(entropy_rate_of(rho, drho, GRID)) < 1e-10


def test_unitary_rate_matches_chain_rule(rng):
    params = PhysicalParams()
    ops = build_operators(BASIS, params)
    h = hamiltonian_at(params, PotentialSchedule(1.0), 0.5, ops)
    rho = random_density(25, rng, rank=3)
    drho = -1j * (h @ rho - rho @ h)
    exact = entropy_rate_of(rho, drho, GRID)
    assert unitary_entropy_rate(rho, h, 1.0, 1e-4, GRID) == pytest.approx(exact, rel=1e-6, abs=1e-9)


# ---- decomposition -----------------------------------------------------------

@pytest.fixture(scope="module")
def short_traj():
    params = PhysicalParams(lam=0.05, gamma=0.1, nbar=1.0)
    ops = build_operators(BASIS, params)
    sched = PotentialSchedule(1.0)
    rho0 = pure(np.linalg.eigh(hamiltonian_at(params, sched, 0.0, ops))[1][:, 0])
    return evolve(rho0, params, sched, ops, 200, stride=5)


def test_decomposition_index_bounds(short_traj):
    for k in (0, len(short_traj) - 1):
        with pytest.raises(IndexError):
            decompose_entropy_rate(short_traj, k, GRID)


def test_decomposition_residual_small(short_traj):
    records = entropy_records(short_traj, GRID)
    scale = max_rate(records)
    for r in records[1:-1]:
        assert r.residual <= 1e-2 * scale
    single = decompose_entropy_rate(short_traj, 7, GRID)
    assert single.residual == pytest.approx(records[7].residual, rel=1e-12, abs=1e-15)


def test_records_on_stored_grid(short_traj):
    records = entropy_records(short_traj, GRID)
    np.testing.assert_allclose([r.t for r in records], short_traj.times)
    assert all(r.Phi_lc == 0.0 for r in records)
