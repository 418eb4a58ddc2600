"""Dense complex linear algebra for small Hilbert spaces.

Basis convention, used everywhere in the package: qubit states are indexed
with 0 = ground, 1 = excited, and a two-qubit state |q_A q_B> sits at index
2*q_A + q_B (qubit A is the left tensor factor).  Composite qubit(s)-cavity
spaces are ordered system (x) cavity.
"""

import numpy as np

from .errors import DimensionMismatch

# centralized numerical tolerances
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
NORM_TOL = 1e-10

# ground state at index 0, excited at index 1
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)

GROUND = np.array([1.0, 0.0], dtype=complex)
EXCITED = np.array([0.0, 1.0], dtype=complex)


def tensor_product(a, b):
    """Kronecker product of two matrices (or vectors)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def dagger(a):
    """Conjugate transpose."""
    return np.asarray(a, dtype=complex).conj().T


def commutator(a, b):
    """a b - b a for square matrices of equal dimension."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"commutator needs equal square matrices, got {a.shape} and {b.shape}")
    return a @ b - b @ a


def expectation(state, op):
    """<state|op|state>.  The state is used as given, without renormalizing."""
    state = np.asarray(state, dtype=complex)
    op = np.asarray(op, dtype=complex)
    if op.shape != (state.size, state.size):
        raise DimensionMismatch(f"operator {op.shape} does not match state of dim {state.size}")
    return complex(np.vdot(state, op @ state))


def partial_trace(rho, keep_dims, trace_dims):
    """Trace out the second (cavity) factor of a system (x) cavity state."""
    rho = np.asarray(rho, dtype=complex)
    d = keep_dims * trace_dims
    if rho.shape != (d, d):
        raise DimensionMismatch(
            f"cannot split {rho.shape} as ({keep_dims} x {trace_dims})^2"
        )
    return np.einsum("ikjk->ij", rho.reshape(keep_dims, trace_dims, keep_dims, trace_dims))


def annihilation(n_levels):
    """Truncated-Fock annihilation operator on n_levels photon states."""
    a = np.zeros((n_levels, n_levels), dtype=complex)
    for n in range(1, n_levels):
        a[n - 1, n] = np.sqrt(n)
    return a


def vacuum(n_levels):
    v = np.zeros(n_levels, dtype=complex)
    v[0] = 1.0
    return v


def op_on_qubit(op, which, n_qubits=2):
    """Embed a single-qubit operator on qubit `which` (0 = A, 1 = B)."""
    mats = [I2] * n_qubits
    mats[which] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def two_qubit_basis_ops():
    """The five-operator basis used by the two-qubit dissipative model.

    Returns (O1, O2, O3, O4, O5) =
    (sm_A, sm_B, sz_A sm_B, sm_A sz_B, sm_A sm_B).
    """
    sm_a = op_on_qubit(SIGMA_MINUS, 0)
    sm_b = op_on_qubit(SIGMA_MINUS, 1)
    sz_a = op_on_qubit(SIGMA_Z, 0)
    sz_b = op_on_qubit(SIGMA_Z, 1)
    return sm_a, sm_b, sz_a @ sm_b, sm_a @ sz_b, sm_a @ sm_b


def lindblad_op(kappa1, kappa2):
    """L = kappa1 sm_A + kappa2 sm_B on the two-qubit space."""
    return kappa1 * op_on_qubit(SIGMA_MINUS, 0) + kappa2 * op_on_qubit(SIGMA_MINUS, 1)


def two_qubit_hamiltonian(omega_s):
    """(omega_s/2)(sz_A + sz_B)."""
    return 0.5 * omega_s * (op_on_qubit(SIGMA_Z, 0) + op_on_qubit(SIGMA_Z, 1))


def ket(*qubits):
    """Computational basis state, e.g. ket(1, 1) -> |11>."""
    out = None
    for q in qubits:
        v = EXCITED if q else GROUND
        out = v if out is None else np.kron(out, v)
    return out


def bell_phi_plus():
    """(|11> + |00>)/sqrt(2)."""
    return (ket(1, 1) + ket(0, 0)) / np.sqrt(2.0)
