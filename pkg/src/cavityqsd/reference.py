"""Deterministic reference solutions the stochastic ensemble must reproduce.

Three independent checks live here:
  * the non-Markovian one-qubit master equation driven by the solved
    coefficient N(t), which the trajectory average equals exactly in the
    infinite-ensemble limit;
  * the closed-form vacuum Jaynes-Cummings excited population cos^2(|g| t)
    for a resonant lossless cavity;
  * a brute-force Lindblad solve of qubit(s) + truncated-Fock cavity with
    cavity damping, the Markovian limit the convolutionless dynamics must
    approach for fast detector memory.
"""

from dataclasses import dataclass

import numpy as np

from . import ops
from .ensemble import DensityMatrixSeries
from .errors import CutoffNotConverged, DimensionMismatch

FOCK_CUTOFF_TOL = 1e-4


def _one_qubit_rhs(rho, omega_s, n):
    """Convolutionless master-equation right-hand side with Oz = n(t) sm."""
    h = 0.5 * omega_s * ops.SIGMA_Z
    oz = n * ops.SIGMA_MINUS
    return (
        -1j * (h @ rho - rho @ h)
        + ops.SIGMA_MINUS @ rho @ ops.dagger(oz)
        - rho @ ops.dagger(oz) @ ops.SIGMA_MINUS
        + oz @ rho @ ops.SIGMA_PLUS
        - ops.SIGMA_PLUS @ oz @ rho
    )


def solve_one_qubit_master(params, coeffs, rho0):
    """Integrate the exact one-qubit master equation on the coefficient grid.

    Uses the stored midpoint values of N(t), so the only error is the
    O(dt^4) stepping error.  Returns a DensityMatrixSeries with zero
    error bars (K = 1 marks it deterministic).
    """
    grid = coeffs.grid
    n_steps, h = grid.n_steps, grid.dt
    rho = np.empty((n_steps + 1, 2, 2), dtype=complex)
    rho[0] = np.asarray(rho0, dtype=complex)
    w = params.omega_s
    cur = rho[0].copy()
    for i in range(n_steps):
        n0, nm, n1 = coeffs.N[i], coeffs.N_mid[i], coeffs.N[i + 1]
        k1 = _one_qubit_rhs(cur, w, n0)
        k2 = _one_qubit_rhs(cur + 0.5 * h * k1, w, nm)
        k3 = _one_qubit_rhs(cur + 0.5 * h * k2, w, nm)
        k4 = _one_qubit_rhs(cur + h * k3, w, n1)
        cur = cur + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho[i + 1] = cur
    return DensityMatrixSeries(
        grid=grid, rho=rho, stderr=np.zeros(n_steps + 1), K=1
    )


def jc_population(g, t):
    """Excited population of a resonant vacuum Rabi cycle: cos^2(|g| t)."""
    return np.cos(np.abs(g) * np.asarray(t)) ** 2


@dataclass(frozen=True)
class LindbladModel:
    """Qubit(s) coupled to a damped truncated-Fock cavity mode.

    H = H_sys + g L a^dag + g* L^dag a + omega a^dag a, collapse sqrt(kappa) a.
    """

    hamiltonian: np.ndarray
    collapse: np.ndarray
    sys_dim: int
    n_cutoff: int

    def rhs(self, rho):
        h, c = self.hamiltonian, self.collapse
        cd = ops.dagger(c)
        cdc = cd @ c
        return (
            -1j * (h @ rho - rho @ h)
            + c @ rho @ cd
            - 0.5 * (cdc @ rho + rho @ cdc)
        )


def build_lindblad_model(params, n_cutoff, kappa=1.0):
    """Assemble the qubit(s) (x) Fock model for the given photon cutoff."""
    if params.n_qubits == 1:
        h_sys = 0.5 * params.omega_s * ops.SIGMA_Z
        l_sys = ops.SIGMA_MINUS
    else:
        h_sys = ops.two_qubit_hamiltonian(params.omega_s)
        l_sys = ops.lindblad_op(params.kappa1, params.kappa2)
    ds = h_sys.shape[0]
    a = ops.annihilation(n_cutoff)
    ident_c = np.eye(n_cutoff, dtype=complex)
    ident_s = np.eye(ds, dtype=complex)
    ham = (
        ops.tensor_product(h_sys, ident_c)
        + params.g * ops.tensor_product(l_sys, ops.dagger(a))
        + np.conj(params.g) * ops.tensor_product(ops.dagger(l_sys), a)
        + params.omega * ops.tensor_product(ident_s, ops.dagger(a) @ a)
    )
    collapse = np.sqrt(kappa) * ops.tensor_product(ident_s, a)
    return LindbladModel(hamiltonian=ham, collapse=collapse, sys_dim=ds, n_cutoff=n_cutoff)


def _integrate_lindblad(model, grid, psi_sys):
    """RK4 march from |psi_sys> (x) |vacuum>; returns reduced system rho."""
    psi0 = ops.tensor_product(np.asarray(psi_sys, dtype=complex), ops.vacuum(model.n_cutoff))
    rho = np.outer(psi0, psi0.conj())
    n_steps, h = grid.n_steps, grid.dt
    ds = model.sys_dim
    out = np.empty((n_steps + 1, ds, ds), dtype=complex)
    out[0] = ops.partial_trace(rho, ds, model.n_cutoff)
    for i in range(n_steps):
        k1 = model.rhs(rho)
        k2 = model.rhs(rho + 0.5 * h * k1)
        k3 = model.rhs(rho + 0.5 * h * k2)
        k4 = model.rhs(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = ops.partial_trace(rho, ds, model.n_cutoff)
    return out


def solve_lindblad_oracle(params, grid, psi_sys, n_cutoff=10, kappa=1.0, check_cutoff=True):
    """Reduced system density matrices from the damped-cavity Lindblad model.

    With check_cutoff the solve is repeated at twice the photon cutoff and
    must agree entrywise to 1e-4, otherwise CutoffNotConverged is raised.
    """
    psi_sys = np.asarray(psi_sys, dtype=complex)
    ds = 2 if params.n_qubits == 1 else 4
    if psi_sys.size != ds:
        raise DimensionMismatch(f"system state of dim {psi_sys.size}, expected {ds}")
    model = build_lindblad_model(params, n_cutoff, kappa)
    rho = _integrate_lindblad(model, grid, psi_sys)
    if check_cutoff:
        model2 = build_lindblad_model(params, 2 * n_cutoff, kappa)
        rho2 = _integrate_lindblad(model2, grid, psi_sys)
        diff = float(np.max(np.abs(rho - rho2)))
        if diff > FOCK_CUTOFF_TOL:
            raise CutoffNotConverged(
                f"doubling the photon cutoff moves the answer by {diff:.3g}"
            )
        rho = rho2
    return DensityMatrixSeries(
        grid=grid, rho=rho, stderr=np.zeros(grid.n_steps + 1), K=1
    )
