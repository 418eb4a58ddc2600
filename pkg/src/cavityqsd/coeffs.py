"""Deterministic coefficient functions of the noise-averaged operators.

One qubit: the closed Riccati pair

    dN/dt = A_a (1 - i M) + (mu_a + i w_s) N + N^2
    dM/dt = -i A_b N     + (mu_b + i w_s) M + N M

where each kernel is written as amplitude * exp(exponent * (t - s)); for the
single-mode cavity kernel A_a = |g|^2, mu_a = -i w, and for the OU detector
kernel A_b = gamma / (2 |g|^2), mu_b = -gamma.

Two qubits: the twelve-function system for the five-operator basis
(sm_A, sm_B, sz_A sm_B, sm_A sz_B, sm_A sm_B).  Because both kernels are
single exponentials, every convolution integral obeys a closed ODE driven
by the diagonal (s -> t) values, so instead of marching the full two- and
three-time coefficient tables we evolve

    N_j(t), M_j(t)            j = 1..4   (scalars), and
    N5, N6, M5, M6 (t, s')               (one slice per time step),

which is exact for these kernels and keeps the kappa2 = 0 reduction to the
one-qubit ODEs exact as well.  The s' = t boundary entry appended at each
step couples the four slices through their trapezoid integrals; that small
linear fixed point is iterated to convergence.
"""

import struct
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import MemoryGuard, NonFiniteValue, PoleEncountered
from .noise import CorrelationKernel, KernelKind, TimeGrid

POLE_CEILING = 1e8


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters, in units of the reference frequency."""

    omega_s: float = 1.0
    omega: float = 0.5
    g: complex = 0.5
    gamma: float = 5.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    n_qubits: int = 1
    cut_probe: bool = False
    omega_a: Optional[float] = None
    omega_b: Optional[float] = None

    def __post_init__(self):
        if self.n_qubits not in (1, 2):
            raise ValueError("n_qubits must be 1 or 2")
        if self.gamma <= 0 and not self.cut_probe:
            raise ValueError("gamma must be positive")

    @property
    def wa(self):
        return self.omega_s if self.omega_a is None else self.omega_a

    @property
    def wb(self):
        return self.omega_s if self.omega_b is None else self.omega_b

    def cavity_kernel(self):
        """alpha(t,s) = |g|^2 e^{-i omega (t-s)}."""
        return CorrelationKernel.single_mode(self.g, self.omega)

    def detector_kernel(self):
        """beta(t,s) = gamma/(2|g|^2) e^{-gamma|t-s|}."""
        return CorrelationKernel.ornstein_uhlenbeck(
            self.gamma / (2.0 * abs(self.g) ** 2), self.gamma
        )

    def direct_kernel(self):
        """OU kernel for the no-probe comparison: (gamma/2) e^{-gamma|t-s|}.

        The amplitude is fixed so the kernel's time integral matches the
        probe channel's second layer in bare (not 1/|g|^2-rescaled) units.
        """
        return CorrelationKernel.ornstein_uhlenbeck(self.gamma / 2.0, self.gamma)


@dataclass(frozen=True)
class OneQubitCoeffs:
    """N(t), M(t) on the grid, plus midpoint values for 4th-order stages."""

    grid: TimeGrid
    N: np.ndarray
    M: np.ndarray
    N_mid: np.ndarray
    M_mid: np.ndarray
    alpha: CorrelationKernel = None
    beta: CorrelationKernel = None
    params: Optional[ModelParams] = None


@dataclass(frozen=True)
class TwoQubitCoeffs:
    """Integrated coefficient functions of the two-qubit noise operators.

    Nj, Mj have shape (4, n+1); row j-1 is N_j(t) / M_j(t).  N5, N6, M5, M6
    have shape (n+1, n+1); row i holds the slice over s' at t = t_i (columns
    past i are zero).
    """

    grid: TimeGrid
    Nj: np.ndarray
    Mj: np.ndarray
    N5: np.ndarray
    N6: np.ndarray
    M5: np.ndarray
    M6: np.ndarray
    alpha: CorrelationKernel = None
    beta: CorrelationKernel = None
    params: Optional[ModelParams] = None


def _check_finite(t, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue((t,))


def _one_qubit_rhs(omega_s, a_amp, a_exp, b_amp, b_exp):
    iws = 1j * omega_s

    def rhs(nm):
        n, m = nm
        dn = a_amp * (1.0 - 1j * m) + (a_exp + iws) * n + n * n
        dm = -1j * b_amp * n + (b_exp + iws) * m + n * m
        return np.array([dn, dm])

    return rhs


def solve_one_qubit_coeffs(params, grid, alpha=None, beta=None):
    """Solve the one-qubit N, M ODEs with a fixed-step RK4 scheme.

    Internally integrates with step dt/2 so that midpoint values are
    available to the master-equation and trajectory integrators.  Raises
    PoleEncountered when |N| blows up (the known Riccati divergence) and
    NonFiniteValue on NaN/Inf.
    """
    alpha = params.cavity_kernel() if alpha is None else alpha
    beta = params.detector_kernel() if beta is None else beta
    rhs = _one_qubit_rhs(
        params.omega_s, alpha.amplitude, alpha.exponent, beta.amplitude, beta.exponent
    )
    n = grid.n_steps
    h = grid.dt / 2.0
    vals = np.zeros((2 * n + 1, 2), dtype=complex)
    y = np.zeros(2, dtype=complex)
    for i in range(2 * n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (i + 1) * h
        if not np.all(np.isfinite(y)):
            raise NonFiniteValue((t,))
        if abs(y[0]) > POLE_CEILING:
            raise PoleEncountered(t)
        vals[i + 1] = y
    return OneQubitCoeffs(
        grid=grid,
        N=vals[::2, 0].copy(),
        M=vals[::2, 1].copy(),
        N_mid=vals[1::2, 0].copy(),
        M_mid=vals[1::2, 1].copy(),
        alpha=alpha,
        beta=beta,
        params=params,
    )


def _trapz_weights(m, dt):
    """Trapezoid weights for m grid points spanning (m-1) intervals."""
    w = np.full(m, dt)
    w[0] = w[-1] = 0.5 * dt
    if m == 1:
        w[0] = 0.0
    return w


class _TwoQubitSystem:
    """Right-hand sides of the closed two-qubit coefficient system."""

    def __init__(self, params, alpha, beta, grid):
        self.wa = params.wa
        self.wb = params.wb
        self.k1 = params.kappa1
        self.k2 = params.kappa2
        self.aa, self.ae = alpha.amplitude, alpha.exponent
        self.ba, self.be = beta.amplitude, beta.exponent
        self.s_grid = grid.times()
        self.dt = grid.dt

    def kernel_vecs(self, t, m):
        tau = t - self.s_grid[:m]
        return self.aa * np.exp(self.ae * tau), self.ba * np.exp(self.be * tau)

    def rhs(self, t, sc, rows):
        """sc = (N1..N4, M1..M4); rows = (4, L) slices N5, N6, M5, M6."""
        N1, N2, N3, N4, M1, M2, M3, M4 = sc
        n5, n6, m5, m6 = rows
        L = n5.shape[0]
        av, bv = self.kernel_vecs(t, L)
        w = _trapz_weights(L, self.dt)
        aw, bw = av * w, bv * w
        i_a_n5 = aw @ n5
        i_b_n6 = bw @ n6
        k1, k2 = self.k1, self.k2
        wa, wb = self.wa, self.wb

        # diagonal (s -> t) values from the ansatz initial conditions
        n1t, n2t = k1 - 1j * M1, k2 - 1j * M2
        n3t, n4t = -1j * M3, -1j * M4

        dsc = np.empty(8, dtype=complex)
        dsc[0] = (self.aa * n1t + self.ae * N1 + 1j * wa * N1
                  + k1 * N1 * N1 + k1 * N4 * N4 - k2 * N1 * N3 + k2 * N3 * N1
                  + k2 * N3 * N4 + k2 * N4 * N3 - 0.5j * k2 * i_a_n5)
        dsc[1] = (self.aa * n2t + self.ae * N2 + 1j * wb * N2
                  - k1 * N2 * N4 + k1 * N3 * N4 + k1 * N4 * N2 + k1 * N4 * N3
                  + k2 * N2 * N2 + k2 * N3 * N3 - 0.5j * k1 * i_a_n5)
        dsc[2] = (self.aa * n3t + self.ae * N3 + 1j * wb * N3
                  - k1 * N2 * N1 + k1 * N3 * N1 + k1 * N4 * N2 + k1 * N4 * N3
                  + k2 * N2 * N3 + k2 * N3 * N2 - 0.5j * k1 * i_a_n5)
        dsc[3] = (self.aa * n4t + self.ae * N4 + 1j * wa * N4
                  + k1 * N1 * N4 + k1 * N4 * N1 - k2 * N1 * N2 + k2 * N3 * N1
                  + k2 * N3 * N4 + k2 * N4 * N2 - 0.5j * k2 * i_a_n5)
        dsc[4] = (self.ba * (-1j * N1) + self.be * M1 + 1j * wa * M1
                  + k1 * N1 * M1 + k1 * N4 * M4 - k2 * N1 * M3 + k2 * N3 * M1
                  + k2 * N3 * M4 + k2 * N4 * M3 - 0.5j * k2 * i_b_n6)
        dsc[5] = (self.ba * (-1j * N2) + self.be * M2 + 1j * wb * M2
                  - k1 * N2 * M4 + k1 * N3 * M4 + k1 * N4 * M2 + k1 * N4 * M3
                  + k2 * N2 * M2 + k2 * N3 * M3 - 0.5j * k1 * i_b_n6)
        dsc[6] = (self.ba * (-1j * N3) + self.be * M3 + 1j * wb * M3
                  - k1 * N2 * M1 + k1 * N3 * M1 + k1 * N4 * M2 + k1 * N4 * M3
                  + k2 * N2 * M3 + k2 * N3 * M2 - 0.5j * k1 * i_b_n6)
        dsc[7] = (self.ba * (-1j * N4) + self.be * M4 + 1j * wa * M4
                  + k1 * N1 * M4 + k1 * N4 * M1 - k2 * N1 * M2 + k2 * N3 * M1
                  + k2 * N3 * M4 + k2 * N4 * M2 - 0.5j * k2 * i_b_n6)

        bracket = 1j * (wa + wb) + k1 * (N1 + N4) + k2 * (N2 + N3)
        cross_n = k1 * (N1 - N4) + k2 * (N2 - N3)
        cross_m = k1 * (M1 - M4) + k2 * (M2 - M3)

        drows = np.empty_like(rows)
        drows[0] = self.aa * (-1j * m5) + (self.ae + bracket + cross_n) * n5
        drows[1] = self.aa * (-1j * m6) + (self.ae + bracket + cross_n) * n6
        drows[2] = self.ba * (-1j * n5) + (self.be + bracket) * m5 + cross_m * n5
        drows[3] = self.ba * (-1j * n6) + (self.be + bracket) * m6 + cross_m * n6
        return dsc, drows

    def boundary_endpoint(self, t, sc, rows_open, x0):
        """Solve the coupled s' = t boundary entries of the four slices.

        rows_open holds the already-evolved interior columns (length L);
        the new endpoint enters each trapezoid integral with weight dt/2
        times the equal-time kernel value, a contraction that is iterated
        to fixed point.
        """
        N1, N2, N3, N4, M1, M2, M3, M4 = sc
        k1, k2 = self.k1, self.k2
        L = rows_open.shape[1]
        av, bv = self.kernel_vecs(t, L + 1)
        w = _trapz_weights(L + 1, self.dt)
        aw, bw = av[:L] * w[:L], bv[:L] * w[:L]
        n5_row, n6_row, m5_row, m6_row = rows_open
        base_a_n5 = aw @ n5_row
        base_a_m5 = aw @ m5_row
        base_b_n6 = bw @ n6_row
        base_b_m6 = bw @ m6_row
        wa_end = w[-1] * self.aa
        wb_end = w[-1] * self.ba

        c_n5 = (-2j * (k1 * N3 + k2 * N4)
                - 2.0 * (M1 * N3 + M2 * N4 - M3 * N1 - M4 * N2))
        c_m5 = -2j * (k1 * M3 + k2 * M4)
        c_m6 = -2.0 * (N1 * M3 + N2 * M4 - N3 * M1 - N4 * M2)

        x_n5, x_n6, x_m5, x_m6 = x0
        for _ in range(100):
            new_n5 = c_n5 - 1j * (base_a_m5 + wa_end * x_m5)
            new_n6 = -1j * (base_a_n5 + wa_end * x_n5)
            new_m5 = c_m5 - 1j * (base_b_m6 + wb_end * x_m6)
            new_m6 = c_m6 - 1j * (base_b_n6 + wb_end * x_n6)
            delta = (abs(new_n5 - x_n5) + abs(new_n6 - x_n6)
                     + abs(new_m5 - x_m5) + abs(new_m6 - x_m6))
            x_n5, x_n6, x_m5, x_m6 = new_n5, new_n6, new_m5, new_m6
            if delta < 1e-15 * (1.0 + abs(x_n5) + abs(x_m6)):
                break
        return np.array([x_n5, x_n6, x_m5, x_m6])


def solve_two_qubit_coeffs(params, grid, alpha=None, beta=None, max_table_bytes=2**31):
    """March the two-qubit coefficient system over the grid.

    Returns the integrated functions N_j(t), M_j(t) and the noise-channel
    slices N5/N6/M5/M6(t, s') needed by the trajectory integrator.
    """
    alpha = params.cavity_kernel() if alpha is None else alpha
    beta = params.detector_kernel() if beta is None else beta
    n = grid.n_steps
    need = 4 * (n + 1) ** 2 * 16
    if need > max_table_bytes:
        raise MemoryGuard(
            f"slice tables need {need} bytes, cap is {max_table_bytes}"
        )
    sys_ = _TwoQubitSystem(params, alpha, beta, grid)
    h = grid.dt

    sc = np.zeros(8, dtype=complex)
    scalars = np.zeros((8, n + 1), dtype=complex)
    tables = np.zeros((4, n + 1, n + 1), dtype=complex)
    rows = np.zeros((4, 1), dtype=complex)

    for i in range(n):
        t = i * h
        k1s, k1r = sys_.rhs(t, sc, rows)
        k2s, k2r = sys_.rhs(t + 0.5 * h, sc + 0.5 * h * k1s, rows + 0.5 * h * k1r)
        k3s, k3r = sys_.rhs(t + 0.5 * h, sc + 0.5 * h * k2s, rows + 0.5 * h * k2r)
        k4s, k4r = sys_.rhs(t + h, sc + h * k3s, rows + h * k3r)
        sc = sc + (h / 6.0) * (k1s + 2 * k2s + 2 * k3s + k4s)
        rows_open = rows + (h / 6.0) * (k1r + 2 * k2r + 2 * k3r + k4r)
        t_new = (i + 1) * h
        _check_finite(t_new, sc, rows_open)
        if np.max(np.abs(sc)) > POLE_CEILING:
            raise PoleEncountered(t_new)
        x0 = rows[:, -1] if i > 0 else np.zeros(4, dtype=complex)
        endpoint = sys_.boundary_endpoint(t_new, sc, rows_open, x0)
        rows = np.concatenate([rows_open, endpoint[:, None]], axis=1)
        scalars[:, i + 1] = sc
        tables[:, i + 1, : i + 2] = rows

    return TwoQubitCoeffs(
        grid=grid,
        Nj=scalars[:4].copy(),
        Mj=scalars[4:].copy(),
        N5=tables[0],
        N6=tables[1],
        M5=tables[2],
        M6=tables[3],
        alpha=alpha,
        beta=beta,
        params=params,
    )


def direct_coupling_coeffs(params, detector_kernel, grid, **kw):
    """Coefficients for the no-probe comparison: the qubits couple straight
    to the detector environment, so the first kernel becomes the detector
    kernel and the second layer is switched off."""
    if not params.cut_probe:
        raise ValueError("direct coupling requires cut_probe=True")
    zero = CorrelationKernel.zero()
    if params.n_qubits == 1:
        return solve_one_qubit_coeffs(params, grid, alpha=detector_kernel, beta=zero)
    return solve_two_qubit_coeffs(params, grid, alpha=detector_kernel, beta=zero, **kw)


# --- binary coefficient cache ---------------------------------------------

_MAGIC = b"CQSD"
_VERSION = 1


def _pack_params(params):
    p = params or ModelParams()
    return struct.pack(
        "<7d i i",
        p.omega_s, p.omega, complex(p.g).real, complex(p.g).imag,
        p.gamma, p.kappa1, p.kappa2, p.n_qubits, int(p.cut_probe),
    )


def save_coeffs(coeffs, path):
    """Dump solved coefficients: versioned header then raw complex doubles."""
    kind = 1 if isinstance(coeffs, OneQubitCoeffs) else 2
    if kind == 1:
        blocks = [coeffs.N, coeffs.M, coeffs.N_mid, coeffs.M_mid]
    else:
        blocks = [coeffs.Nj, coeffs.Mj, coeffs.N5, coeffs.N6, coeffs.M5, coeffs.M6]
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<iidd", _VERSION, kind, coeffs.grid.t_max, coeffs.grid.dt))
        f.write(_pack_params(coeffs.params))
        for b in blocks:
            f.write(np.ascontiguousarray(b, dtype="<c16").tobytes())


def load_coeffs(path):
    """Read a coefficient cache written by save_coeffs."""
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path} is not a coefficient cache")
        version, kind, t_max, dt = struct.unpack("<iidd", f.read(24))
        if version != _VERSION:
            raise ValueError(f"unsupported cache version {version}")
        vals = struct.unpack("<7d i i", f.read(7 * 8 + 8))
        params = ModelParams(
            omega_s=vals[0], omega=vals[1], g=complex(vals[2], vals[3]),
            gamma=vals[4], kappa1=vals[5], kappa2=vals[6],
            n_qubits=vals[7], cut_probe=bool(vals[8]),
        )
        grid = TimeGrid(t_max, dt)
        n = grid.n_steps
        raw = f.read()

    def take(shape, offset):
        cnt = int(np.prod(shape))
        arr = np.frombuffer(raw, dtype="<c16", count=cnt, offset=offset)
        return arr.reshape(shape).astype(complex), offset + cnt * 16

    off = 0
    if kind == 1:
        N, off = take((n + 1,), off)
        M, off = take((n + 1,), off)
        N_mid, off = take((n,), off)
        M_mid, off = take((n,), off)
        return OneQubitCoeffs(grid, N, M, N_mid, M_mid, params=params)
    Nj, off = take((4, n + 1), off)
    Mj, off = take((4, n + 1), off)
    N5, off = take((n + 1, n + 1), off)
    N6, off = take((n + 1, n + 1), off)
    M5, off = take((n + 1, n + 1), off)
    M6, off = take((n + 1, n + 1), off)
    return TwoQubitCoeffs(grid, Nj, Mj, N5, N6, M5, M6, params=params)
