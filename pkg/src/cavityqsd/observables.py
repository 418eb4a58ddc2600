"""Physical observables extracted from density-matrix time series.

Populations and coherences come from the reduced single-qubit matrix;
two-qubit entanglement is the Wootters concurrence.  Monte-Carlo matrices
can carry tiny negative eigenvalues, so before the concurrence each matrix
is symmetrized, clipped to the PSD cone and trace-renormalized; the clipped
mass is kept as a quality diagnostic.  Error bars on the concurrence use a
jackknife over trajectory blocks because the map is non-smooth at C = 0.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import ops
from .errors import DimensionMismatch

HERM_INPUT_TOL = 1e-8

_YY = np.kron(ops.SIGMA_Y, ops.SIGMA_Y)


@dataclass(frozen=True)
class ObservableSeries:
    """A named real time series with pointwise standard errors."""

    grid: object
    name: str
    values: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict)


def _reduced_qubit(rho_stack, which):
    """Reduced 2x2 matrices for the requested qubit (0 = A, 1 = B)."""
    d = rho_stack.shape[-1]
    if d == 2:
        if which != 0:
            raise IndexError("one-qubit series has only qubit 0")
        return rho_stack, 1.0
    if d != 4:
        raise DimensionMismatch(f"expected 2x2 or 4x4 matrices, got {d}x{d}")
    if which not in (0, 1):
        raise IndexError(f"qubit index {which} out of range")
    r = rho_stack.reshape(-1, 2, 2, 2, 2)
    if which == 0:
        out = np.einsum("tikjk->tij", r)
    else:
        out = np.einsum("tkikj->tij", r)
    # two entries of the full matrix enter each reduced entry
    return out, np.sqrt(2.0)


def population(series, which=0):
    """Excited-state occupation of one qubit over time."""
    red, fac = _reduced_qubit(series.rho, which)
    vals = red[:, 1, 1].real
    return ObservableSeries(
        grid=series.grid,
        name=f"population_q{which}",
        values=vals,
        stderr=fac * series.stderr,
    )


def coherence(series, which=0):
    """Magnitude of the reduced off-diagonal element over time."""
    red, fac = _reduced_qubit(series.rho, which)
    vals = np.abs(red[:, 0, 1])
    return ObservableSeries(
        grid=series.grid,
        name=f"coherence_q{which}",
        values=vals,
        stderr=fac * series.stderr,
    )


def _concurrence_values(rho_stack):
    """Batched Wootters concurrence with PSD projection.

    Returns (C, clipped_mass) where clipped_mass is the total negative
    eigenvalue weight removed at each time.
    """
    rho = np.asarray(rho_stack, dtype=complex)
    squeeze = rho.ndim == 2
    if squeeze:
        rho = rho[None]
    if rho.shape[-2:] != (4, 4):
        raise DimensionMismatch("concurrence needs 4x4 matrices")
    herm_err = np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))))
    if herm_err > HERM_INPUT_TOL:
        raise ValueError(f"matrix is not Hermitian (asymmetry {herm_err:.3g})")
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    w, v = np.linalg.eigh(rho)
    clipped = np.sum(np.abs(np.minimum(w, 0.0)), axis=-1)
    w = np.clip(w, 0.0, None)
    tr = np.sum(w, axis=-1, keepdims=True)
    w = np.where(tr > 0, w / np.where(tr > 0, tr, 1.0), w)
    vd = np.conj(np.swapaxes(v, -1, -2))
    rho_psd = (v * w[..., None, :]) @ vd
    sqrt_rho = (v * np.sqrt(w)[..., None, :]) @ vd
    rho_tilde = _YY @ np.conj(rho_psd) @ _YY
    m = sqrt_rho @ rho_tilde @ sqrt_rho
    m = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(m), 0.0, None))  # ascending
    c = lam[..., 3] - lam[..., 2] - lam[..., 1] - lam[..., 0]
    c = np.clip(c, 0.0, 1.0)
    if squeeze:
        return float(c[0]), float(clipped[0])
    return c, clipped


def concurrence(series):
    """Wootters concurrence of a two-qubit density-matrix series.

    Error bars come from a delete-one-block jackknife when the series
    carries its per-block projector sums; otherwise they are zero.
    """
    vals, clipped = _concurrence_values(series.rho)
    stderr = np.zeros_like(vals)
    if series.block_sums is not None and len(series.block_sums) >= 2:
        nblocks = len(series.block_sums)
        total = series.block_sums.sum(axis=0)
        counts = series.block_counts
        ka = int(counts.sum())
        reps = np.empty((nblocks,) + vals.shape)
        for b in range(nblocks):
            rho_b = (total - series.block_sums[b]) / (ka - counts[b])
            rho_b = 0.5 * (rho_b + np.conj(np.swapaxes(rho_b, -1, -2)))
            reps[b], _ = _concurrence_values(rho_b)
        mean = reps.mean(axis=0)
        stderr = np.sqrt((nblocks - 1) / nblocks * np.sum((reps - mean) ** 2, axis=0))
    return ObservableSeries(
        grid=series.grid,
        name="concurrence",
        values=vals,
        stderr=stderr,
        meta={"clipped_mass": clipped},
    )


def concurrence_of_matrix(rho):
    """Concurrence of a single 4x4 density matrix."""
    c, _ = _concurrence_values(rho)
    return c


def werner_concurrence(p):
    """Closed form for p |Phi+><Phi+| + (1-p) I/4: max(0, (3p-1)/2)."""
    return max(0.0, (3.0 * p - 1.0) / 2.0)
