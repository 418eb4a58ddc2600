"""Correlation kernels and colored complex Gaussian noise sampling.

Two noise channels drive the trajectories: the cavity channel z*_t, whose
kernel is a single-mode exponential |g|^2 e^{-i w (t-s)}, and the detector
channel y*_t with a stationary Ornstein-Uhlenbeck kernel c e^{-gamma|t-s|}.
Both kernels are single exponentials in (t - s), which the coefficient
solvers exploit.

Normalization: complex Gaussians follow E[|z|^2] = 1, E[z^2] = 0 per mode
(each real component has variance 1/2).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GridMismatch, KernelKindError


class KernelKind(Enum):
    SINGLE_MODE = "single_mode"
    ORNSTEIN_UHLENBECK = "ornstein_uhlenbeck"
    ZERO = "zero"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, t_max] with n_steps intervals of width dt."""

    t_max: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        n = round(self.t_max / self.dt)
        if n < 1 or abs(n * self.dt - self.t_max) > 1e-12 * max(1.0, self.t_max):
            raise ValueError(f"t_max = {self.t_max} is not an integer multiple of dt = {self.dt}")

    @property
    def n_steps(self):
        return round(self.t_max / self.dt)

    def times(self):
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class CorrelationKernel:
    """Two-time correlation alpha(t,s) or beta(t,s).

    For t >= s the kernel equals amplitude * exp(exponent * (t - s)); the
    t < s half follows by Hermitian symmetry.  Single-mode: amplitude
    |g|^2, exponent -i*omega.  OU: amplitude c, exponent -gamma.
    """

    kind: KernelKind
    g: complex = 0.0
    omega: float = 0.0
    c: float = 0.0
    gamma: float = 0.0

    @classmethod
    def single_mode(cls, g, omega):
        return cls(KernelKind.SINGLE_MODE, g=complex(g), omega=float(omega))

    @classmethod
    def ornstein_uhlenbeck(cls, c, gamma):
        if gamma <= 0:
            raise ValueError("OU kernel needs gamma > 0")
        if c < 0:
            raise ValueError("OU kernel needs amplitude c >= 0")
        return cls(KernelKind.ORNSTEIN_UHLENBECK, c=float(c), gamma=float(gamma))

    @classmethod
    def zero(cls):
        return cls(KernelKind.ZERO)

    @property
    def amplitude(self):
        """Equal-time kernel value."""
        if self.kind is KernelKind.SINGLE_MODE:
            return abs(self.g) ** 2
        if self.kind is KernelKind.ORNSTEIN_UHLENBECK:
            return self.c
        return 0.0

    @property
    def exponent(self):
        """d/dt log kernel on the t > s side."""
        if self.kind is KernelKind.SINGLE_MODE:
            return -1j * self.omega
        if self.kind is KernelKind.ORNSTEIN_UHLENBECK:
            return -self.gamma
        return 0.0


def kernel_value(kernel, t, s):
    """Analytic kernel value; Hermitian in (t, s)."""
    tau = t - s
    if kernel.kind is KernelKind.ZERO:
        return 0.0 + 0.0j
    if tau >= 0:
        return kernel.amplitude * np.exp(kernel.exponent * tau)
    return np.conj(kernel.amplitude * np.exp(kernel.exponent * (-tau)))


@dataclass(frozen=True)
class NoiseRealization:
    """One sampled path of z*_t or y*_t on a grid."""

    grid: TimeGrid
    values: np.ndarray
    seed: int

    def __post_init__(self):
        if len(self.values) != self.grid.n_steps + 1:
            raise GridMismatch("noise path length does not match grid")


def _single_mode_from_draws(kernel, grid, draws):
    # one complex Gaussian z with E|z|^2 = 1; path is -i g conj(z) e^{i w t}
    z = (draws[0] + 1j * draws[1]) / np.sqrt(2.0)
    return -1j * kernel.g * np.conj(z) * np.exp(1j * kernel.omega * grid.times())


def _ou_from_draws(kernel, grid, draws):
    # exact AR(1) discretization of the stationary complex OU process
    n = grid.n_steps
    decay = np.exp(-kernel.gamma * grid.dt)
    y = np.empty(n + 1, dtype=complex)
    y[0] = np.sqrt(kernel.c / 2.0) * (draws[0] + 1j * draws[1])
    xi_scale = np.sqrt(kernel.c * (1.0 - decay**2) / 2.0)
    xi = xi_scale * (draws[2 : 2 + n] + 1j * draws[2 + n : 2 + 2 * n])
    for k in range(n):
        y[k + 1] = decay * y[k] + xi[k]
    return y


def sample_cavity_noise(kernel, grid, seed):
    """Sample one single-mode path z*_t = -i g z* e^{i w t}."""
    if kernel.kind is not KernelKind.SINGLE_MODE:
        raise KernelKindError(f"cavity noise needs a single-mode kernel, got {kernel.kind}")
    rng = np.random.default_rng(seed)
    values = _single_mode_from_draws(kernel, grid, rng.standard_normal(2))
    return NoiseRealization(grid, values, seed)


def sample_ou_noise(kernel, grid, seed):
    """Sample one stationary complex Ornstein-Uhlenbeck path y*_t."""
    if kernel.kind is not KernelKind.ORNSTEIN_UHLENBECK:
        raise KernelKindError(f"OU sampler needs an OU kernel, got {kernel.kind}")
    if kernel.gamma * grid.dt > 10.0:
        raise ValueError(f"grid too coarse for the kernel: gamma*dt = {kernel.gamma * grid.dt:.3g} > 10")
    rng = np.random.default_rng(seed)
    n = grid.n_steps
    values = _ou_from_draws(kernel, grid, rng.standard_normal(2 + 2 * n))
    return NoiseRealization(grid, values, seed)


def sample_noise(kernel, grid, seed):
    """Dispatch on kernel kind; a Zero kernel yields the zero path."""
    if kernel.kind is KernelKind.SINGLE_MODE:
        return sample_cavity_noise(kernel, grid, seed)
    if kernel.kind is KernelKind.ORNSTEIN_UHLENBECK:
        return sample_ou_noise(kernel, grid, seed)
    return NoiseRealization(grid, np.zeros(grid.n_steps + 1, dtype=complex), seed)


def empirical_correlation(paths, i, j):
    """Sample mean and standard error of z_{t_i} z*_{t_j} across paths.

    Stored values are the conjugated processes (z*_t), so the estimator
    averages conj(values[i]) * values[j]; its expectation is the kernel
    alpha(t_i, t_j).
    """
    if len(paths) < 2:
        raise ValueError("need at least two paths")
    grid = paths[0].grid
    for p in paths:
        if p.grid != grid:
            raise GridMismatch("paths do not share a grid")
    prods = np.array([np.conj(p.values[i]) * p.values[j] for p in paths])
    mean = prods.mean()
    stderr = float(np.sqrt(np.mean(np.abs(prods - mean) ** 2) / (len(prods) - 1)))
    return complex(mean), stderr
