"""Ensemble orchestration: average trajectory projectors into rho_t.

Trajectory k draws its two noise paths from sub-seeds derived only from
(master_seed, k), and batches have a fixed size, so results are
bit-identical for any worker count.  Batch sums are combined with a
pairwise tree reduction in batch order (floating-point addition is not
associative).  Overflowing trajectories (norm > 1e6) are dropped from both
mean and variance and counted; the run aborts if more than 0.1% of K
overflow.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ExcessiveRejects, GridMismatch
from .noise import KernelKind
from .trajectory import OVERFLOW_NORM, integrate_batch

DEFAULT_BATCH_SIZE = 1000
REJECT_FRACTION = 1e-3
WORKERS_ENV = "CAVITYQSD_WORKERS"


@dataclass(frozen=True)
class DensityMatrixSeries:
    """Ensemble-averaged reduced density matrices with MC error bars."""

    grid: object
    rho: np.ndarray           # (n+1, d, d), Hermitian
    stderr: np.ndarray        # (n+1,) max entrywise standard error
    K: int
    rejected: int = 0
    block_sums: Optional[np.ndarray] = None    # (B, n+1, d, d) projector sums
    block_counts: Optional[np.ndarray] = None  # accepted count per block


def sub_seed(master_seed, k, channel):
    """Deterministic 64-bit stream seed for trajectory k, channel 0 (z) or 1 (y)."""
    return int(np.random.SeedSequence([master_seed, k, channel]).generate_state(1)[0])


def _noise_block(kernel, grid, seeds):
    """Stack noise paths for the given seeds; arithmetic matches the
    per-path samplers in `noise` bit for bit."""
    n = grid.n_steps
    B = len(seeds)
    if kernel is None or kernel.kind is KernelKind.ZERO:
        return np.zeros((B, n + 1), dtype=complex)
    if kernel.kind is KernelKind.SINGLE_MODE:
        draws = np.stack([np.random.default_rng(s).standard_normal(2) for s in seeds])
        zc = (draws[:, 0] + 1j * draws[:, 1]) / np.sqrt(2.0)
        return (-1j * kernel.g * np.conj(zc))[:, None] * np.exp(
            1j * kernel.omega * grid.times()
        )[None, :]
    if kernel.gamma * grid.dt > 10.0:
        raise ValueError("grid too coarse for the OU kernel (gamma*dt > 10)")
    draws = np.stack(
        [np.random.default_rng(s).standard_normal(2 + 2 * n) for s in seeds]
    )
    decay = np.exp(-kernel.gamma * grid.dt)
    out = np.empty((B, n + 1), dtype=complex)
    out[:, 0] = np.sqrt(kernel.c / 2.0) * (draws[:, 0] + 1j * draws[:, 1])
    xi_scale = np.sqrt(kernel.c * (1.0 - decay**2) / 2.0)
    xi = xi_scale * (draws[:, 2 : 2 + n] + 1j * draws[:, 2 + n : 2 + 2 * n])
    for k in range(n):
        out[:, k + 1] = decay * out[:, k] + xi[:, k]
    return out


def _run_batch(b, params, coeffs, z_kernel, y_kernel, grid, psi0, batch_size, K, master_seed):
    k_lo = b * batch_size
    k_hi = min(K, k_lo + batch_size)
    idx = range(k_lo, k_hi)
    z = _noise_block(z_kernel, grid, [sub_seed(master_seed, k, 0) for k in idx])
    y = _noise_block(y_kernel, grid, [sub_seed(master_seed, k, 1) for k in idx])
    psi = integrate_batch(params, coeffs, z, y, psi0)
    norms2 = np.einsum("bti,bti->bt", psi, psi.conj()).real
    bad = np.any(~np.isfinite(norms2) | (norms2 > OVERFLOW_NORM**2), axis=1)
    good = psi[~bad]
    sum_outer = np.einsum("bti,btj->tij", good, good.conj())
    a2 = np.abs(good) ** 2
    sum_abs2 = np.einsum("bti,btj->tij", a2, a2)
    return sum_outer, sum_abs2, int(good.shape[0]), int(np.sum(bad))


_POOL_CTX = {}


def _pool_init(ctx):
    _POOL_CTX.update(ctx)


def _pool_batch(b):
    return _run_batch(b, **_POOL_CTX)


def _tree_sum(items):
    items = list(items)
    while len(items) > 1:
        items = [
            items[i] + items[i + 1] if i + 1 < len(items) else items[i]
            for i in range(0, len(items), 2)
        ]
    return items[0]


def _series_from_sums(grid, batch_results, K):
    outers = [r[0] for r in batch_results]
    abs2s = [r[1] for r in batch_results]
    counts = np.array([r[2] for r in batch_results])
    rejected = int(sum(r[3] for r in batch_results))
    if rejected > REJECT_FRACTION * K:
        raise ExcessiveRejects(rejected, K)
    ka = int(counts.sum())
    sum_outer = _tree_sum(outers)
    sum_abs2 = _tree_sum(abs2s)
    rho = sum_outer / ka
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
    if ka > 1:
        var = (sum_abs2 / ka - np.abs(rho) ** 2) * ka / (ka - 1)
        stderr = np.sqrt(np.clip(var, 0.0, None) / ka).max(axis=(1, 2))
    else:
        stderr = np.zeros(rho.shape[0])
    return DensityMatrixSeries(
        grid=grid,
        rho=rho,
        stderr=stderr,
        K=K,
        rejected=rejected,
        block_sums=np.stack(outers),
        block_counts=counts,
    )


def resolve_workers(workers=None):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def run_ensemble(
    params,
    coeffs,
    kernels,
    grid,
    K,
    master_seed,
    psi0,
    workers=None,
    batch_size=DEFAULT_BATCH_SIZE,
    progress=None,
):
    """Average K trajectories into a DensityMatrixSeries.

    kernels is the (z_kernel, y_kernel) pair used to sample the two noise
    channels; pass a Zero kernel (or None) for a silent channel.
    """
    if K < 2:
        raise ValueError("ensemble needs K >= 2")
    if grid != coeffs.grid:
        raise GridMismatch("coefficient grid does not match the run grid")
    z_kernel, y_kernel = kernels
    psi0 = np.asarray(psi0, dtype=complex)
    n_batches = (K + batch_size - 1) // batch_size
    ctx = dict(
        params=params, coeffs=coeffs, z_kernel=z_kernel, y_kernel=y_kernel,
        grid=grid, psi0=psi0, batch_size=batch_size, K=K, master_seed=master_seed,
    )
    workers = resolve_workers(workers)
    results = []
    if workers == 1 or n_batches == 1:
        for b in range(n_batches):
            results.append(_run_batch(b, **ctx))
            if progress is not None:
                progress((b + 1) / n_batches)
    else:
        with ProcessPoolExecutor(
            max_workers=min(workers, n_batches),
            initializer=_pool_init,
            initargs=(ctx,),
        ) as pool:
            for b, res in enumerate(pool.map(_pool_batch, range(n_batches))):
                results.append(res)
                if progress is not None:
                    progress((b + 1) / n_batches)
    return _series_from_sums(grid, results, K)


def density_from_trajectories(paths):
    """Brute-force mean of psi psi^dag over explicit TrajectoryState objects."""
    if not paths:
        raise ValueError("no trajectories given")
    grid = paths[0].grid
    for p in paths:
        if p.grid != grid:
            raise GridMismatch("trajectories do not share a grid")
    psi = np.stack([p.psi for p in paths])
    sum_outer = np.einsum("bti,btj->tij", psi, psi.conj())
    a2 = np.abs(psi) ** 2
    sum_abs2 = np.einsum("bti,btj->tij", a2, a2)
    return _series_from_sums(grid, [(sum_outer, sum_abs2, len(paths), 0)], len(paths))


def mc_error(series, t_index):
    """Per-time Monte-Carlo standard error stored on the series."""
    if series.K < 2:
        raise ValueError("standard error needs K >= 2")
    if not 0 <= t_index < len(series.stderr):
        raise IndexError(f"time index {t_index} out of range")
    return float(series.stderr[t_index])
