"""Single-trajectory integration checks."""

import numpy as np
import pytest

from cavityqsd import ops
from cavityqsd.coeffs import ModelParams, OneQubitCoeffs, solve_one_qubit_coeffs, solve_two_qubit_coeffs
from cavityqsd.errors import GridMismatch, NonFiniteValue
from cavityqsd.noise import CorrelationKernel, TimeGrid, sample_noise
from cavityqsd.trajectory import (
    build_effective_generator,
    integrate_batch,
    run_trajectory,
)


def _one_qubit_setup(seed=0, gamma=5.0):
    grid = TimeGrid(t_max=4.0, dt=0.02)
    model = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=gamma, n_qubits=1)
    coeffs = solve_one_qubit_coeffs(model, grid)
    z = sample_noise(model.cavity_kernel(), grid, seed)
    y = sample_noise(model.detector_kernel(), grid, seed + 1)
    return model, grid, coeffs, z, y


def test_generator_grid_mismatch():
    model, grid, coeffs, z, y = _one_qubit_setup()
    other = TimeGrid(t_max=4.0, dt=0.04)
    z_bad = sample_noise(model.cavity_kernel(), other, 0)
    with pytest.raises(GridMismatch):
        build_effective_generator(model, coeffs, z_bad, y)
    gen = build_effective_generator(model, coeffs, z, y)
    with pytest.raises(GridMismatch):
        run_trajectory(gen, ops.EXCITED, other)


def test_generator_matrix_structure():
    model, grid, coeffs, z, y = _one_qubit_setup()
    gen = build_effective_generator(model, coeffs, z, y)
    g0 = gen.matrix(0)
    # at t=0 the coefficients vanish, so only the Hamiltonian and the raw
    # noise drive remain
    expected = -0.5j * model.omega_s * ops.SIGMA_Z + z.values[0] * ops.SIGMA_MINUS
    np.testing.assert_allclose(g0, expected, atol=1e-14)


def test_run_trajectory_agrees_with_batch():
    model, grid, coeffs, z, y = _one_qubit_setup(seed=5)
    gen = build_effective_generator(model, coeffs, z, y)
    traj = run_trajectory(gen, ops.EXCITED, grid)
    batch = integrate_batch(
        model, coeffs, z.values[None, :], y.values[None, :],
        np.asarray(ops.EXCITED, dtype=complex),
    )
    np.testing.assert_array_equal(traj.psi, batch[0])
    assert traj.seed_pair == (5, 6)


def test_initial_norm_check():
    model, grid, coeffs, z, y = _one_qubit_setup()
    gen = build_effective_generator(model, coeffs, z, y)
    with pytest.raises(ValueError):
        run_trajectory(gen, 2.0 * ops.EXCITED, grid)
    # linearity makes unnormalized starts legitimate when asked for
    t2 = run_trajectory(gen, 2.0 * ops.EXCITED, grid, check_norm=False)
    t1 = run_trajectory(gen, ops.EXCITED, grid)
    np.testing.assert_allclose(t2.psi, 2.0 * t1.psi, rtol=1e-12)


def test_equation_is_linear_in_state():
    model, grid, coeffs, z, y = _one_qubit_setup(seed=9)
    gen = build_effective_generator(model, coeffs, z, y)
    a = run_trajectory(gen, ops.EXCITED, grid)
    b = run_trajectory(gen, ops.GROUND, grid)
    mix = (ops.EXCITED + ops.GROUND) / np.sqrt(2)
    c = run_trajectory(gen, mix, grid)
    np.testing.assert_allclose(c.psi, (a.psi + b.psi) / np.sqrt(2), atol=1e-10)


def test_noise_free_decay_matches_riccati_rate():
    # with both noises zeroed the excited amplitude obeys da/dt = (-i w/2 - N) a
    grid = TimeGrid(t_max=2.0, dt=0.01)
    model = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0, n_qubits=1)
    coeffs = solve_one_qubit_coeffs(model, grid)
    zero = sample_noise(CorrelationKernel.zero(), grid, 0)
    gen = build_effective_generator(model, coeffs, zero, zero)
    traj = run_trajectory(gen, ops.EXCITED, grid)
    # trapezoid of N(t) using the stored midpoints (Simpson)
    t = grid.times()
    integral = np.concatenate([
        [0.0],
        np.cumsum((coeffs.N[:-1] + 4 * coeffs.N_mid + coeffs.N[1:]) * grid.dt / 6),
    ])
    expected = np.exp(-0.5j * model.omega_s * t - integral)
    np.testing.assert_allclose(traj.psi[:, 1], expected, atol=1e-8)
    # ground amplitude stays empty without noise
    assert np.abs(traj.psi[:, 0]).max() < 1e-12


def test_overflow_raises():
    grid = TimeGrid(t_max=4.0, dt=0.02)
    model = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0, n_qubits=1)
    n = grid.n_steps
    # hand-built coefficients with a strongly anti-damping N
    bad = OneQubitCoeffs(
        grid=grid,
        N=np.full(n + 1, -6.0, dtype=complex),
        M=np.zeros(n + 1, dtype=complex),
        N_mid=np.full(n, -6.0, dtype=complex),
        M_mid=np.zeros(n, dtype=complex),
    )
    zero = sample_noise(CorrelationKernel.zero(), grid, 0)
    gen = build_effective_generator(model, bad, zero, zero)
    with pytest.raises(NonFiniteValue):
        run_trajectory(gen, ops.EXCITED, grid)


def test_two_qubit_generator_noise_functional():
    grid = TimeGrid(t_max=2.0, dt=0.02)
    model = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0,
                        kappa1=1.0, kappa2=1.0, n_qubits=2)
    coeffs = solve_two_qubit_coeffs(model, grid)
    z = sample_noise(model.cavity_kernel(), grid, 3)
    y = sample_noise(model.detector_kernel(), grid, 4)
    gen = build_effective_generator(model, coeffs, z, y)
    traj = run_trajectory(gen, ops.bell_phi_plus(), grid)
    assert traj.psi.shape == (grid.n_steps + 1, 4)
    assert np.all(np.isfinite(traj.psi))
    # matrix at a late index includes the O5 noise functional; just check
    # it reproduces the batched integrator
    batch = integrate_batch(
        model, coeffs, z.values[None, :], y.values[None, :],
        np.asarray(ops.bell_phi_plus(), dtype=complex),
    )
    np.testing.assert_array_equal(traj.psi, batch[0])
