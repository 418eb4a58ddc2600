"""Basic operator algebra checks."""

import numpy as np
import pytest

from cavityqsd import ops
from cavityqsd.errors import DimensionMismatch


def test_pauli_conventions():
    # ground at index 0, excited at index 1
    assert ops.SIGMA_Z[0, 0] == -1 and ops.SIGMA_Z[1, 1] == 1
    np.testing.assert_allclose(ops.SIGMA_MINUS @ ops.EXCITED, ops.GROUND)
    np.testing.assert_allclose(ops.SIGMA_MINUS @ ops.GROUND, 0 * ops.GROUND)
    np.testing.assert_allclose(ops.SIGMA_PLUS, ops.dagger(ops.SIGMA_MINUS))


def test_commutator_and_expectation():
    comm = ops.commutator(ops.SIGMA_PLUS, ops.SIGMA_MINUS)
    np.testing.assert_allclose(comm, ops.SIGMA_Z)
    assert ops.expectation(ops.EXCITED, ops.SIGMA_Z) == pytest.approx(1.0)
    # expectation does not renormalize
    assert ops.expectation(2.0 * ops.EXCITED, ops.SIGMA_Z) == pytest.approx(4.0)
    with pytest.raises(DimensionMismatch):
        ops.commutator(ops.SIGMA_Z, np.eye(3))
    with pytest.raises(DimensionMismatch):
        ops.expectation(ops.EXCITED, np.eye(3))


def test_tensor_and_partial_trace():
    rho_q = np.outer(ops.EXCITED, ops.EXCITED.conj())
    rho_c = np.diag([0.5, 0.3, 0.2]).astype(complex)
    rho = ops.tensor_product(rho_q, rho_c)
    red = ops.partial_trace(rho, 2, 3)
    np.testing.assert_allclose(red, rho_q, atol=1e-14)
    with pytest.raises(DimensionMismatch):
        ops.partial_trace(rho, 2, 2)


def test_annihilation_ladder():
    a = ops.annihilation(4)
    n_op = ops.dagger(a) @ a
    np.testing.assert_allclose(np.diag(n_op).real, [0, 1, 2, 3])
    v = ops.vacuum(4)
    np.testing.assert_allclose(a @ v, 0 * v)


def test_two_qubit_basis():
    o1, o2, o3, o4, o5 = ops.two_qubit_basis_ops()
    # lowering A maps |10> to |00>
    np.testing.assert_allclose(o1 @ ops.ket(1, 0), ops.ket(0, 0))
    np.testing.assert_allclose(o2 @ ops.ket(0, 1), ops.ket(0, 0))
    # o3 = sz_A sm_B picks up a sign from the A ground state
    np.testing.assert_allclose(o3 @ ops.ket(0, 1), -ops.ket(0, 0))
    np.testing.assert_allclose(o4 @ ops.ket(1, 0), -ops.ket(0, 0))
    np.testing.assert_allclose(o5 @ ops.ket(1, 1), ops.ket(0, 0))
    L = ops.lindblad_op(1.0, 0.5)
    np.testing.assert_allclose(L, o1 + 0.5 * o2)
    H = ops.two_qubit_hamiltonian(2.0)
    assert ops.expectation(ops.ket(1, 1), H) == pytest.approx(2.0)
    assert ops.expectation(ops.ket(0, 0), H) == pytest.approx(-2.0)


def test_bell_state():
    b = ops.bell_phi_plus()
    assert np.linalg.norm(b) == pytest.approx(1.0)
    assert b[0] == pytest.approx(1 / np.sqrt(2))
    assert b[3] == pytest.approx(1 / np.sqrt(2))
