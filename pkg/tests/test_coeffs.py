"""Coefficient-solver checks: closed forms, reductions, guards, caching."""

import numpy as np
import pytest

from cavityqsd.coeffs import (
    ModelParams,
    direct_coupling_coeffs,
    load_coeffs,
    save_coeffs,
    solve_one_qubit_coeffs,
    solve_two_qubit_coeffs,
)
from cavityqsd.errors import MemoryGuard, PoleEncountered
from cavityqsd.noise import CorrelationKernel, TimeGrid


def test_riccati_closed_form():
    # with the detector layer off and cavity on resonance, N = |g| tan(|g| t)
    g = 0.5
    grid = TimeGrid(t_max=2.4, dt=0.005)
    model = ModelParams(omega_s=1.0, omega=1.0, g=g, n_qubits=1)
    c = solve_one_qubit_coeffs(
        model, grid, alpha=model.cavity_kernel(), beta=CorrelationKernel.zero()
    )
    t = grid.times()
    exact = g * np.tan(g * t)
    rel = np.abs(c.N[1:] - exact[1:]) / np.abs(exact[1:])
    assert rel.max() < 1e-6
    assert np.abs(c.M).max() == 0.0
    # midpoints are consistent with the closed form too
    t_mid = t[:-1] + grid.dt / 2
    rel_mid = np.abs(c.N_mid - g * np.tan(g * t_mid)) / np.abs(g * np.tan(g * t_mid))
    assert rel_mid.max() < 1e-6


def test_pole_detection():
    # the resonant tan solution diverges at |g| t = pi/2
    model = ModelParams(omega_s=1.0, omega=1.0, g=1.0, n_qubits=1)
    grid = TimeGrid(t_max=4.0, dt=0.002)
    with pytest.raises(PoleEncountered) as exc:
        solve_one_qubit_coeffs(
            model, grid, alpha=model.cavity_kernel(), beta=CorrelationKernel.zero()
        )
    # pole sits near t = pi/2
    assert exc.value.t == pytest.approx(np.pi / 2, abs=0.05)


def test_damped_solve_runs_clean():
    model = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0, n_qubits=1)
    grid = TimeGrid(t_max=10.0, dt=0.02)
    c = solve_one_qubit_coeffs(model, grid)
    assert np.all(np.isfinite(c.N)) and np.all(np.isfinite(c.M))
    assert c.N[0] == 0 and c.M[0] == 0


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(n_qubits=3)
    with pytest.raises(ValueError):
        ModelParams(gamma=-1.0)
    p = ModelParams(omega_a=0.9)
    assert p.wa == 0.9 and p.wb == p.omega_s


def test_two_qubit_kappa2_zero_reduces_to_one_qubit():
    grid = TimeGrid(t_max=4.0, dt=0.02)
    one = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0, n_qubits=1)
    c1 = solve_one_qubit_coeffs(one, grid)
    two = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0,
                      kappa1=1.0, kappa2=0.0, n_qubits=2)
    c2 = solve_two_qubit_coeffs(two, grid)
    assert np.abs(c2.Nj[0] - c1.N).max() < 1e-8
    # the other channels never get driven
    for j in (1, 2, 3):
        assert np.abs(c2.Nj[j]).max() == 0.0
    assert np.abs(c2.N5).max() == 0.0


def test_two_qubit_exchange_symmetry():
    grid = TimeGrid(t_max=4.0, dt=0.02)
    sym = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0,
                      kappa1=1.0, kappa2=1.0, n_qubits=2)
    c = solve_two_qubit_coeffs(sym, grid)
    assert np.abs(c.Nj[0] - c.Nj[1]).max() < 1e-10
    assert np.abs(c.Nj[2] - c.Nj[3]).max() < 1e-10
    assert np.abs(c.Mj[0] - c.Mj[1]).max() < 1e-10
    assert np.abs(c.Mj[2] - c.Mj[3]).max() < 1e-10


def test_two_qubit_initial_conditions():
    grid = TimeGrid(t_max=1.0, dt=0.05)
    model = ModelParams(n_qubits=2)
    c = solve_two_qubit_coeffs(model, grid)
    assert np.all(c.Nj[:, 0] == 0) and np.all(c.Mj[:, 0] == 0)
    # slice tables are lower-triangular by construction
    n = grid.n_steps
    for i in range(n + 1):
        assert np.all(c.N5[i, i + 1:] == 0)


def test_memory_guard():
    grid = TimeGrid(t_max=1.0, dt=0.01)
    with pytest.raises(MemoryGuard):
        solve_two_qubit_coeffs(ModelParams(n_qubits=2), grid, max_table_bytes=1024)


def test_direct_coupling_mode():
    grid = TimeGrid(t_max=2.0, dt=0.02)
    model = ModelParams(omega_s=1.0, gamma=5.0, n_qubits=1, cut_probe=True)
    c = direct_coupling_coeffs(model, model.direct_kernel(), grid)
    # second layer is off: M never develops
    assert np.abs(c.M).max() == 0.0
    assert np.abs(c.N).max() > 0.0
    with pytest.raises(ValueError):
        direct_coupling_coeffs(
            ModelParams(n_qubits=1), ModelParams().direct_kernel(), grid
        )


def test_cache_roundtrip(tmp_path):
    grid = TimeGrid(t_max=2.0, dt=0.05)
    model = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0, n_qubits=1)
    c = solve_one_qubit_coeffs(model, grid)
    path = tmp_path / "one.coeffs"
    save_coeffs(c, path)
    back = load_coeffs(path)
    np.testing.assert_array_equal(back.N, c.N)
    np.testing.assert_array_equal(back.M_mid, c.M_mid)
    assert back.params == c.params and back.grid == c.grid

    two = ModelParams(n_qubits=2)
    ct = solve_two_qubit_coeffs(two, grid)
    path2 = tmp_path / "two.coeffs"
    save_coeffs(ct, path2)
    back2 = load_coeffs(path2)
    np.testing.assert_array_equal(back2.Nj, ct.Nj)
    np.testing.assert_array_equal(back2.M6, ct.M6)


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a cache at all")
    with pytest.raises(ValueError):
        load_coeffs(path)
