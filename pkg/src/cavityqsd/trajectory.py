"""Integration of single stochastic trajectories of the linear QSD equation.

The equation is integrated in its unnormalized (linear) form,

    d psi/dt = [-i H_s + L z*_t - (L^dag + i y*_t) Oz_bar(t) - i z*_t Oy_bar(t)] psi,

with a fixed-step 4th-order scheme and no per-step renormalization; the
ensemble average restores the norm.  Noise values at half-step stage times
are linearly interpolated.  One-qubit coefficient midpoints are exact
(stored by the coefficient solver); two-qubit coefficients are midpoint
interpolated, which stays below the Monte-Carlo error.

The batched core integrates many trajectories at once with vectorized
numpy arithmetic; `run_trajectory` is the single-path wrapper.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import ops
from .coeffs import OneQubitCoeffs, TwoQubitCoeffs
from .errors import GridMismatch, NonFiniteValue
from .noise import TimeGrid

OVERFLOW_NORM = 1e6


@dataclass(frozen=True)
class TrajectoryState:
    """Unnormalized wavefunction psi_t of one stochastic realization."""

    grid: TimeGrid
    psi: np.ndarray  # (n_steps+1, dim)
    seed_pair: Tuple[int, int] = (0, 0)


class EffectiveGenerator:
    """Time-indexed rule for the matrix G(t) driving one trajectory."""

    def __init__(self, params, coeffs, z_path, y_path):
        if coeffs.grid != z_path.grid or coeffs.grid != y_path.grid:
            raise GridMismatch("coefficient and noise grids differ")
        self.params = params
        self.coeffs = coeffs
        self.grid = coeffs.grid
        self.z = z_path.values
        self.y = y_path.values
        self.seed_pair = (z_path.seed, y_path.seed)
        if isinstance(coeffs, OneQubitCoeffs):
            self.dim = 2
        else:
            self.dim = 4
            self._two_qubit_mats()

    def _two_qubit_mats(self):
        o1, o2, o3, o4, o5 = ops.two_qubit_basis_ops()
        self.obasis = (o1, o2, o3, o4)
        self.o5 = o5
        self.L = ops.lindblad_op(self.params.kappa1, self.params.kappa2)
        self.Ldag = ops.dagger(self.L)
        self.H = ops.two_qubit_hamiltonian(self.params.omega_s)

    def _noise_functional(self, i):
        """F_z and F_y at grid index i: quadrature of the stored noise path
        against the N5/N6 (resp. M5/M6) slice rows."""
        c = self.coeffs
        w = np.full(i + 1, self.grid.dt)
        w[0] = w[-1] = 0.5 * self.grid.dt
        if i == 0:
            w[0] = 0.0
        fz = (c.N5[i, : i + 1] * w) @ self.z[: i + 1] + (c.N6[i, : i + 1] * w) @ self.y[: i + 1]
        fy = (c.M5[i, : i + 1] * w) @ self.z[: i + 1] + (c.M6[i, : i + 1] * w) @ self.y[: i + 1]
        return fz, fy

    def matrix(self, i):
        """Dense G at grid index i."""
        zv, yv = self.z[i], self.y[i]
        if self.dim == 2:
            n, m = self.coeffs.N[i], self.coeffs.M[i]
            return self._one_qubit_matrix(n, m, zv, yv)
        nj = self.coeffs.Nj[:, i]
        mj = self.coeffs.Mj[:, i]
        fz, fy = self._noise_functional(i)
        return self._two_qubit_matrix(nj, mj, fz, fy, zv, yv)

    def _one_qubit_matrix(self, n, m, zv, yv):
        p = self.params
        return (
            -0.5j * p.omega_s * ops.SIGMA_Z
            + zv * ops.SIGMA_MINUS
            - n * (ops.SIGMA_PLUS @ ops.SIGMA_MINUS)
            - 1j * (n * yv + m * zv) * ops.SIGMA_MINUS
        )

    def _two_qubit_matrix(self, nj, mj, fz, fy, zv, yv):
        oz = sum(nj[j] * self.obasis[j] for j in range(4)) + 1j * fz * self.o5
        oy = sum(mj[j] * self.obasis[j] for j in range(4)) + 1j * fy * self.o5
        return (
            -1j * self.H
            + zv * self.L
            - (self.Ldag + 1j * yv * np.eye(4)) @ oz
            - 1j * zv * oy
        )


def build_effective_generator(params, coeffs, z_path, y_path):
    """Assemble the trajectory generator from solved coefficients and noises."""
    return EffectiveGenerator(params, coeffs, z_path, y_path)


def _batch_core_one_qubit(params, coeffs, z, y, psi0):
    """Vectorized RK4 for a batch of one-qubit trajectories.

    z, y: (B, n+1) noise paths; returns psi of shape (B, n+1, 2).
    """
    grid = coeffs.grid
    n, h = grid.n_steps, grid.dt
    B = z.shape[0]
    sm_t = ops.SIGMA_MINUS.T.copy()
    sz_t = ops.SIGMA_Z.T.copy()
    proj_t = (ops.SIGMA_PLUS @ ops.SIGMA_MINUS).T.copy()
    w0 = -0.5j * params.omega_s

    psi = np.empty((B, n + 1, 2), dtype=complex)
    psi[:, 0] = psi0[None, :]

    def apply(nc, mc, zv, yv, p):
        coef = zv - 1j * (nc * yv + mc * zv)
        return w0 * (p @ sz_t) + coef[:, None] * (p @ sm_t) - nc * (p @ proj_t)

    cur = psi[:, 0].copy()
    for i in range(n):
        z0, z1 = z[:, i], z[:, i + 1]
        y0, y1 = y[:, i], y[:, i + 1]
        zm, ym = 0.5 * (z0 + z1), 0.5 * (y0 + y1)
        n0, m0 = coeffs.N[i], coeffs.M[i]
        nm, mm = coeffs.N_mid[i], coeffs.M_mid[i]
        n1, m1 = coeffs.N[i + 1], coeffs.M[i + 1]
        k1 = apply(n0, m0, z0, y0, cur)
        k2 = apply(nm, mm, zm, ym, cur + 0.5 * h * k1)
        k3 = apply(nm, mm, zm, ym, cur + 0.5 * h * k2)
        k4 = apply(n1, m1, z1, y1, cur + h * k3)
        cur = cur + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        psi[:, i + 1] = cur
    return psi


def _batch_core_two_qubit(params, coeffs, z, y, psi0):
    """Vectorized RK4 for a batch of two-qubit trajectories."""
    grid = coeffs.grid
    n, h = grid.n_steps, grid.dt
    B = z.shape[0]
    o1, o2, o3, o4, o5 = ops.two_qubit_basis_ops()
    obasis = np.stack([o1, o2, o3, o4])
    L = ops.lindblad_op(params.kappa1, params.kappa2)
    Ldag = ops.dagger(L)
    H = ops.two_qubit_hamiltonian(params.omega_s)
    L_t = L.T.copy()
    LdagO5_t = (Ldag @ o5).T.copy()
    o5_t = o5.T.copy()

    # trapezoid weights per row index (against the noise paths)
    def row_dot(table, path, i):
        w = np.full(i + 1, h)
        w[0] = w[-1] = 0.5 * h
        if i == 0:
            w[0] = 0.0
        return path[:, : i + 1] @ (table[i, : i + 1] * w)

    def f_at(i):
        fz = row_dot(coeffs.N5, z, i) + row_dot(coeffs.N6, y, i)
        fy = row_dot(coeffs.M5, z, i) + row_dot(coeffs.M6, y, i)
        return fz, fy

    psi = np.empty((B, n + 1, 4), dtype=complex)
    psi[:, 0] = psi0[None, :]
    cur = psi[:, 0].copy()
    fz_i, fy_i = f_at(0)

    def apply(nj, mj, fz, fy, zv, yv, p):
        oz_det = np.tensordot(nj, obasis, axes=(0, 0))
        oy_det = np.tensordot(mj, obasis, axes=(0, 0))
        const = -1j * H - Ldag @ oz_det
        out = p @ const.T
        out += zv[:, None] * (p @ L_t)
        out += (-1j * yv)[:, None] * (p @ oz_det.T)
        out += (-1j * zv)[:, None] * (p @ oy_det.T)
        out += (-1j * fz)[:, None] * (p @ LdagO5_t)
        out += (yv * fz + zv * fy)[:, None] * (p @ o5_t)
        return out

    for i in range(n):
        z0, z1 = z[:, i], z[:, i + 1]
        y0, y1 = y[:, i], y[:, i + 1]
        zm, ym = 0.5 * (z0 + z1), 0.5 * (y0 + y1)
        nj0, nj1 = coeffs.Nj[:, i], coeffs.Nj[:, i + 1]
        mj0, mj1 = coeffs.Mj[:, i], coeffs.Mj[:, i + 1]
        njm, mjm = 0.5 * (nj0 + nj1), 0.5 * (mj0 + mj1)
        fz_ip1, fy_ip1 = f_at(i + 1)
        fzm, fym = 0.5 * (fz_i + fz_ip1), 0.5 * (fy_i + fy_ip1)
        k1 = apply(nj0, mj0, fz_i, fy_i, z0, y0, cur)
        k2 = apply(njm, mjm, fzm, fym, zm, ym, cur + 0.5 * h * k1)
        k3 = apply(njm, mjm, fzm, fym, zm, ym, cur + 0.5 * h * k2)
        k4 = apply(nj1, mj1, fz_ip1, fy_ip1, z1, y1, cur + h * k3)
        cur = cur + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        psi[:, i + 1] = cur
        fz_i, fy_i = fz_ip1, fy_ip1
    return psi


def integrate_batch(params, coeffs, z, y, psi0):
    """Integrate a batch of trajectories sharing coefficients.

    No overflow handling here; callers inspect the returned amplitudes.
    """
    if isinstance(coeffs, OneQubitCoeffs):
        return _batch_core_one_qubit(params, coeffs, z, y, psi0)
    return _batch_core_two_qubit(params, coeffs, z, y, psi0)


def run_trajectory(generator, psi0, grid, check_norm=True):
    """Integrate one trajectory; raises NonFiniteValue on overflow."""
    psi0 = np.asarray(psi0, dtype=complex)
    if grid != generator.grid:
        raise GridMismatch("grid does not match the generator")
    if check_norm and abs(np.linalg.norm(psi0) - 1.0) > ops.NORM_TOL:
        raise ValueError("initial state must be normalized")
    psi = integrate_batch(
        generator.params,
        generator.coeffs,
        generator.z[None, :],
        generator.y[None, :],
        psi0,
    )[0]
    norms2 = np.einsum("ti,ti->t", psi, psi.conj()).real
    bad = ~np.isfinite(norms2) | (norms2 > OVERFLOW_NORM**2)
    if np.any(bad):
        t_bad = grid.times()[int(np.argmax(bad))]
        raise NonFiniteValue((t_bad,), f"trajectory overflowed at t = {t_bad:.6g}")
    return TrajectoryState(grid=grid, psi=psi, seed_pair=generator.seed_pair)
