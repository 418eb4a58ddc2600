"""Stochastic trajectory simulation of qubits measured through a cavity probe.

Qubit(s) couple to a single cavity mode which is itself monitored by a
broadband detector environment; the package integrates the exact
(non-Markovian) linear diffusion equation for the unnormalized system
wavefunction, averages trajectories into density matrices, and extracts
populations, coherences and two-qubit concurrence, with deterministic
seeded ensembles and built-in reference oracles.
"""

from .coeffs import (
    ModelParams,
    OneQubitCoeffs,
    TwoQubitCoeffs,
    direct_coupling_coeffs,
    load_coeffs,
    save_coeffs,
    solve_one_qubit_coeffs,
    solve_two_qubit_coeffs,
)
from .ensemble import (
    DensityMatrixSeries,
    density_from_trajectories,
    mc_error,
    run_ensemble,
    sub_seed,
)
from .errors import (
    CavityQSDError,
    ConfigError,
    CutoffNotConverged,
    DimensionMismatch,
    ExcessiveRejects,
    GridMismatch,
    KernelKindError,
    MemoryGuard,
    NonFiniteValue,
    PoleEncountered,
)
from .noise import (
    CorrelationKernel,
    KernelKind,
    NoiseRealization,
    TimeGrid,
    empirical_correlation,
    kernel_value,
    sample_cavity_noise,
    sample_noise,
    sample_ou_noise,
)
from .observables import (
    ObservableSeries,
    coherence,
    concurrence,
    concurrence_of_matrix,
    population,
    werner_concurrence,
)
from .reference import (
    LindbladModel,
    build_lindblad_model,
    jc_population,
    solve_lindblad_oracle,
    solve_one_qubit_master,
)
from .trajectory import (
    EffectiveGenerator,
    TrajectoryState,
    build_effective_generator,
    integrate_batch,
    run_trajectory,
)

__version__ = "0.1.0"
