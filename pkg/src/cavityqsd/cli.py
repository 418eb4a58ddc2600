"""Command-line entry point and run orchestration.

Verbs:
  run <config>          execute a custom run from an INI-style config
  scenario <id>         execute a bundled preset (fig2a, fig2b, fig3a, fig3b)
  validate              run the built-in validation suite (quick or full)
  coeffs <config>       solve and dump the coefficient tables to a binary cache

Config format (INI sections, frequencies in units of the qubit splitting,
times in its inverse):

  [model]    scenario, n_qubits, omega_s, omega, g, gamma, kappa1, kappa2,
             direct_coupling, initial_state
  [grid]     t_max, dt
  [ensemble] K, seed, workers
  [output]   directory, observables

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 validation
failures present.
"""

import argparse
import configparser
import os
import sys
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import ops, reference
from .coeffs import (
    ModelParams,
    direct_coupling_coeffs,
    save_coeffs,
    solve_one_qubit_coeffs,
    solve_two_qubit_coeffs,
)
from .ensemble import run_ensemble
from .errors import CavityQSDError, ConfigError
from .noise import CorrelationKernel, TimeGrid, empirical_correlation, kernel_value, sample_noise
from .observables import (
    coherence,
    concurrence,
    concurrence_of_matrix,
    population,
    werner_concurrence,
)

SCENARIOS = {
    # one-qubit decay, slow detector memory (strongly non-Markovian)
    "fig2a": dict(n_qubits=1, omega_s=1.0, omega=0.5, gamma=0.5,
                  g=0.5, t_max=10.0, dt=0.02, K=10000, initial="excited"),
    # one-qubit decay, fast detector memory
    "fig2b": dict(n_qubits=1, omega_s=1.0, omega=0.5, gamma=5.0,
                  g=0.5, t_max=10.0, dt=0.02, K=10000, initial="excited"),
    # two-qubit entanglement decay from a Bell state
    "fig3a": dict(n_qubits=2, omega_s=1.0, omega=0.5, gamma=5.0, g=0.5,
                  kappa1=1.0, kappa2=1.0, t_max=10.0, dt=0.02, K=20000,
                  initial="bell_phi_plus"),
    # two-qubit entanglement generation from |11>
    "fig3b": dict(n_qubits=2, omega_s=1.0, omega=0.5, gamma=5.0, g=0.5,
                  kappa1=1.0, kappa2=1.0, t_max=10.0, dt=0.02, K=20000,
                  initial="both_excited"),
}

# representative coupling pair for the one-qubit decay scenarios
SCENARIO_G_VALUES = (0.3, 0.5)

_KNOWN_KEYS = {
    "model": {"scenario", "n_qubits", "omega_s", "omega", "g", "gamma",
              "kappa1", "kappa2", "direct_coupling", "initial_state"},
    "grid": {"t_max", "dt"},
    "ensemble": {"k", "seed", "workers", "batch_size"},
    "output": {"directory", "observables", "prefix"},
}


@dataclass
class RunConfig:
    """Fully resolved run description."""

    model: ModelParams
    grid: TimeGrid
    K: int
    master_seed: int
    initial_state: np.ndarray
    initial_name: str
    outputs: List[str]
    scenario: Optional[str] = None
    direct_coupling: bool = False
    workers: Optional[int] = None
    batch_size: int = 1000
    directory: str = "."
    prefix: str = "run"


def _initial_state(name_or_amps, n_qubits):
    presets = {
        "excited": (ops.EXCITED, 1),
        "ground": (ops.GROUND, 1),
        "bell_phi_plus": (ops.bell_phi_plus(), 2),
        "both_excited": (ops.ket(1, 1), 2),
    }
    if name_or_amps in presets:
        vec, nq = presets[name_or_amps]
        if nq != n_qubits:
            raise ConfigError(
                f"initial state '{name_or_amps}' needs n_qubits={nq}",
                field="model.initial_state",
            )
        return vec.copy(), name_or_amps
    try:
        amps = np.array([complex(x) for x in name_or_amps.split(",")])
    except ValueError:
        raise ConfigError(
            f"unknown initial state '{name_or_amps}'", field="model.initial_state"
        )
    if amps.size != 2**n_qubits:
        raise ConfigError(
            f"need {2**n_qubits} amplitudes, got {amps.size}",
            field="model.initial_state",
        )
    if abs(np.linalg.norm(amps) - 1.0) > 1e-10:
        raise ConfigError(
            "initial amplitudes are not normalized", field="model.initial_state"
        )
    return amps, "custom"


def parse_config(text):
    """Parse and validate an INI config document into a RunConfig."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}")
    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]", field=section)
        for key in cp[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key '{key}'", field=f"{section}.{key}")

    def get(section, key, cast, default=None, required=False):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                if cast is bool:
                    return cp.getboolean(section, key)
                return cast(raw)
            except ValueError:
                raise ConfigError(
                    f"cannot parse '{raw}' as {cast.__name__}", field=f"{section}.{key}"
                )
        if required:
            raise ConfigError(f"missing required key '{key}'", field=f"{section}.{key}")
        return default

    scenario = get("model", "scenario", str)
    preset = {}
    if scenario is not None:
        if scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario '{scenario}'", field="model.scenario")
        preset = SCENARIOS[scenario]
        # scenario presets win over conflicting explicit keys, loudly
        conflicts = []
        mapping = {
            "model": ["n_qubits", "omega_s", "omega", "g", "gamma", "kappa1", "kappa2"],
            "grid": ["t_max", "dt"],
        }
        for sec, keys in mapping.items():
            for key in keys:
                if cp.has_option(sec, key) and key in preset:
                    conflicts.append(f"{sec}.{key}")
        if cp.has_option("model", "initial_state") and "initial" in preset:
            conflicts.append("model.initial_state")
        if conflicts:
            print(
                f"warning: scenario '{scenario}' overrides {', '.join(conflicts)}",
                file=sys.stderr,
            )

    def pick(section, key, cast, preset_key, default=None, required=False):
        if preset_key in preset:
            return preset[preset_key]
        return get(section, key, cast, default=default, required=required)

    n_qubits = int(pick("model", "n_qubits", int, "n_qubits", default=1))
    model = ModelParams(
        omega_s=pick("model", "omega_s", float, "omega_s", default=1.0),
        omega=pick("model", "omega", float, "omega", default=0.5),
        g=pick("model", "g", float, "g", default=0.5),
        gamma=pick("model", "gamma", float, "gamma", default=5.0),
        kappa1=pick("model", "kappa1", float, "kappa1", default=1.0),
        kappa2=pick("model", "kappa2", float, "kappa2", default=1.0),
        n_qubits=n_qubits,
    )
    t_max = pick("grid", "t_max", float, "t_max", required=scenario is None)
    dt = pick("grid", "dt", float, "dt", required=scenario is None)
    try:
        grid = TimeGrid(t_max=t_max, dt=dt)
    except ValueError as e:
        raise ConfigError(str(e), field="grid")
    K = pick("ensemble", "k", int, "K", required=scenario is None)
    if K is None or K < 100:
        raise ConfigError("ensemble size below minimum (K >= 100)", field="ensemble.k")
    seed = get("ensemble", "seed", int, default=12345)
    if seed < 0:
        raise ConfigError("seed must be non-negative", field="ensemble.seed")
    initial = get("model", "initial_state", str, default=preset.get("initial"))
    if initial is None:
        initial = "excited" if n_qubits == 1 else "bell_phi_plus"
    psi0, initial_name = _initial_state(initial, n_qubits)
    outputs = get("output", "observables", str)
    if outputs:
        outputs = [o.strip() for o in outputs.split(",") if o.strip()]
        known = {"population", "coherence", "concurrence"}
        for o in outputs:
            if o not in known:
                raise ConfigError(f"unknown observable '{o}'", field="output.observables")
        if "concurrence" in outputs and n_qubits != 2:
            raise ConfigError("concurrence needs n_qubits=2", field="output.observables")
    else:
        outputs = ["population"] if n_qubits == 1 else ["concurrence"]
    return RunConfig(
        model=model,
        grid=grid,
        K=K,
        master_seed=seed,
        initial_state=psi0,
        initial_name=initial_name,
        outputs=outputs,
        scenario=scenario,
        direct_coupling=get("model", "direct_coupling", bool, default=False),
        workers=get("ensemble", "workers", int),
        batch_size=get("ensemble", "batch_size", int, default=1000),
        directory=get("output", "directory", str, default="."),
        prefix=get("output", "prefix", str, default=scenario or "run"),
    )


def render_config(config):
    """Inverse of parse_config (up to equivalence), for round-trip checks."""
    m = config.model
    lines = ["[model]"]
    lines += [f"n_qubits = {m.n_qubits}", f"omega_s = {m.omega_s!r}",
              f"omega = {m.omega!r}", f"g = {complex(m.g).real!r}",
              f"gamma = {m.gamma!r}", f"kappa1 = {m.kappa1!r}",
              f"kappa2 = {m.kappa2!r}",
              f"direct_coupling = {str(config.direct_coupling).lower()}"]
    if config.initial_name != "custom":
        lines.append(f"initial_state = {config.initial_name}")
    else:
        amps = ",".join(str(complex(a)) for a in config.initial_state)
        lines.append(f"initial_state = {amps}")
    lines += ["", "[grid]", f"t_max = {config.grid.t_max!r}", f"dt = {config.grid.dt!r}"]
    lines += ["", "[ensemble]", f"K = {config.K}", f"seed = {config.master_seed}"]
    lines += ["", "[output]", f"observables = {','.join(config.outputs)}",
              f"directory = {config.directory}", f"prefix = {config.prefix}"]
    return "\n".join(lines) + "\n"


def export_csv(series_list, path, metadata=()):
    """Write observable series as CSV: t, <name>, <name>_stderr, ...

    Deterministic byte output: 12 significant digits, UNIX newlines.
    """
    lines = [f"# {m}" for m in metadata]
    if not series_list:
        lines.append("t")
        data = None
    else:
        grid = series_list[0].grid
        for s in series_list:
            if s.grid != grid:
                raise ValueError("series do not share a grid")
        header = ["t"]
        cols = [grid.times()]
        for s in series_list:
            header += [s.name, f"{s.name}_stderr"]
            cols += [np.asarray(s.values, dtype=float), np.asarray(s.stderr, dtype=float)]
        lines.append(",".join(header))
        data = np.column_stack(cols)
    if data is not None:
        for row in data:
            lines.append(",".join(f"{v:.12g}" for v in row))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def _solve_coeffs(model, grid):
    if model.n_qubits == 1:
        return solve_one_qubit_coeffs(model, grid)
    return solve_two_qubit_coeffs(model, grid)


def _run_one(model, grid, K, seed, psi0, direct=False, workers=None, batch_size=1000):
    """Solve coefficients, pick the noise kernels, and run the ensemble."""
    if direct:
        model = replace(model, cut_probe=True)
        kern = model.direct_kernel()
        coeffs = direct_coupling_coeffs(model, kern, grid)
        kernels = (kern, CorrelationKernel.zero())
    else:
        coeffs = _solve_coeffs(model, grid)
        kernels = (model.cavity_kernel(), model.detector_kernel())
    series = run_ensemble(
        model, coeffs, kernels, grid, K, seed, psi0,
        workers=workers, batch_size=batch_size,
    )
    return coeffs, series


def run_scenario(config, out_dir=None):
    """Execute a config end to end; returns the list of written files."""
    out_dir = out_dir or config.directory
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.time()
    written = []
    meta = [
        "frequencies in units of the qubit splitting; time in its inverse",
        "direct-coupling comparison kernel: (gamma/2) exp(-gamma|t-s|), "
        "amplitude set by matching the cavity channel's detector-layer integral "
        "(a convention, not a measured value)",
    ]
    summary = []
    path = os.path.join(out_dir, f"{config.prefix}.csv")
    try:
        if config.scenario in ("fig2a", "fig2b"):
            meta.append(
                f"coupling values g = {SCENARIO_G_VALUES} are representative choices"
            )
            all_series = []
            for g in SCENARIO_G_VALUES:
                model = replace(config.model, g=g)
                for direct in (False, True):
                    tag = "direct" if direct else "cavity"
                    _, dm = _run_one(
                        model, config.grid, config.K, config.master_seed,
                        config.initial_state, direct=direct,
                        workers=config.workers, batch_size=config.batch_size,
                    )
                    s = population(dm)
                    s = type(s)(grid=s.grid, name=f"population_{tag}_g{g:g}",
                                values=s.values, stderr=s.stderr, meta=s.meta)
                    all_series.append(s)
                    summary.append((s.name, dm.rejected, float(dm.stderr.max())))
                coeffs = solve_one_qubit_coeffs(model, config.grid)
                rho0 = np.outer(config.initial_state, config.initial_state.conj())
                ref = reference.solve_one_qubit_master(model, coeffs, rho0)
                r = population(ref)
                all_series.append(type(r)(grid=r.grid, name=f"population_master_g{g:g}",
                                          values=r.values, stderr=r.stderr, meta=r.meta))
            export_csv(all_series, path, metadata=meta)
            written.append(path)
        elif config.scenario in ("fig3a", "fig3b"):
            all_series = []
            for direct in (False, True):
                tag = "direct" if direct else "cavity"
                _, dm = _run_one(
                    config.model, config.grid, config.K, config.master_seed,
                    config.initial_state, direct=direct,
                    workers=config.workers, batch_size=config.batch_size,
                )
                s = concurrence(dm)
                s = type(s)(grid=s.grid, name=f"concurrence_{tag}",
                            values=s.values, stderr=s.stderr, meta=s.meta)
                all_series.append(s)
                summary.append((s.name, dm.rejected, float(dm.stderr.max())))
            export_csv(all_series, path, metadata=meta)
            written.append(path)
        else:
            _, dm = _run_one(
                config.model, config.grid, config.K, config.master_seed,
                config.initial_state, direct=config.direct_coupling,
                workers=config.workers, batch_size=config.batch_size,
            )
            all_series = []
            for name in config.outputs:
                if name == "population":
                    all_series.append(population(dm))
                elif name == "coherence":
                    all_series.append(coherence(dm))
                elif name == "concurrence":
                    all_series.append(concurrence(dm))
            if config.model.n_qubits == 1 and not config.direct_coupling:
                coeffs = _solve_coeffs(config.model, config.grid)
                rho0 = np.outer(config.initial_state, config.initial_state.conj())
                ref = reference.solve_one_qubit_master(config.model, coeffs, rho0)
                r = population(ref)
                all_series.append(type(r)(grid=r.grid, name="population_master",
                                          values=r.values, stderr=r.stderr, meta=r.meta))
            export_csv(all_series, path, metadata=meta)
            written.append(path)
            summary.append((config.prefix, dm.rejected, float(dm.stderr.max())))
    except KeyboardInterrupt:
        for p in written:
            if os.path.exists(p):
                os.remove(p)
        if os.path.exists(path):
            os.remove(path)
        raise
    wall = time.time() - t0
    for name, rejected, max_err in summary:
        print(f"{name}: rejected={rejected} max_stderr={max_err:.3g}")
    print(f"wrote {', '.join(written)} in {wall:.1f} s")
    return written


# --- validation suite ------------------------------------------------------


def _check_noise_statistics(K=10000, seed=777, kernels=None):
    """Empirical two-time moments vs the analytic kernels at 25 index pairs."""
    grid = TimeGrid(t_max=2.0, dt=0.1)
    nominal = [
        CorrelationKernel.single_mode(0.5, 0.5),
        CorrelationKernel.ornstein_uhlenbeck(1.0, 2.0),
    ]
    sampled = kernels if kernels is not None else nominal
    worst = 0.0
    for kern_true, kern_sample in zip(nominal, sampled):
        paths = [sample_noise(kern_sample, grid, seed + k) for k in range(K)]
        idx = np.linspace(0, grid.n_steps, 5, dtype=int)
        for i in idx:
            for j in idx:
                mean, err = empirical_correlation(paths, i, j)
                target = kernel_value(kern_true, grid.times()[i], grid.times()[j])
                worst = max(worst, abs(mean - target) / max(err, 1e-300))
                vals = np.array([p.values[i] * p.values[j] for p in paths])
                m2 = vals.mean()
                e2 = np.sqrt(np.mean(np.abs(vals - m2) ** 2) / (K - 1))
                worst = max(worst, abs(m2) / max(e2, 1e-300))
    return worst <= 5.0, f"worst deviation {worst:.2f} standard errors (limit 5)"


def _check_riccati():
    g = 0.5
    grid = TimeGrid(t_max=2.4, dt=0.005)
    model = ModelParams(omega_s=1.0, omega=1.0, g=g, gamma=5.0, n_qubits=1)
    coeffs = solve_one_qubit_coeffs(
        model, grid, alpha=model.cavity_kernel(), beta=CorrelationKernel.zero()
    )
    t = grid.times()
    exact = g * np.tan(g * t)
    rel = np.abs(coeffs.N - exact) / np.maximum(np.abs(exact), 1e-12)
    rel = rel[1:]
    return float(rel.max()) <= 1e-6, f"max relative error {rel.max():.2e} (limit 1e-6)"


def _check_oracle_chain(K=10000, seed=4242):
    g = 0.5
    grid = TimeGrid(t_max=2.4, dt=0.02)
    model = ModelParams(omega_s=1.0, omega=1.0, g=g, gamma=5.0, n_qubits=1)
    coeffs = solve_one_qubit_coeffs(
        model, grid, alpha=model.cavity_kernel(), beta=CorrelationKernel.zero()
    )
    t = grid.times()
    exact = reference.jc_population(g, t)
    rho0 = np.outer(ops.EXCITED, ops.EXCITED.conj())
    ref = reference.solve_one_qubit_master(model, coeffs, rho0)
    master_err = float(np.abs(population(ref).values - exact).max())
    lind = reference.solve_lindblad_oracle(model, grid, ops.EXCITED, kappa=0.0)
    lind_err = float(np.abs(population(lind).values - exact).max())
    dm = run_ensemble(
        model, coeffs, (model.cavity_kernel(), CorrelationKernel.zero()),
        grid, K, seed, ops.EXCITED,
    )
    pop = population(dm)
    tol = np.maximum(0.02, 3.0 * pop.stderr)
    ens_err = float(np.abs(pop.values - exact).max())
    ok = master_err <= 1e-6 and lind_err <= 1e-6 and np.all(
        np.abs(pop.values - exact) <= tol
    )
    return ok, (
        f"master {master_err:.2e} (1e-6), lindblad {lind_err:.2e} (1e-6), "
        f"ensemble {ens_err:.3f} (max(0.02, 3 stderr))"
    )


def _check_two_qubit_reductions():
    grid = TimeGrid(t_max=4.0, dt=0.02)
    one = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0, n_qubits=1)
    c1 = solve_one_qubit_coeffs(one, grid)
    two = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0,
                      kappa1=1.0, kappa2=0.0, n_qubits=2)
    c2 = solve_two_qubit_coeffs(two, grid)
    red_err = float(np.abs(c2.Nj[0] - c1.N).max())
    sym = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=5.0,
                      kappa1=1.0, kappa2=1.0, n_qubits=2)
    cs = solve_two_qubit_coeffs(sym, grid)
    sym_err = max(
        float(np.abs(cs.Nj[0] - cs.Nj[1]).max()),
        float(np.abs(cs.Nj[2] - cs.Nj[3]).max()),
        float(np.abs(cs.Mj[0] - cs.Mj[1]).max()),
        float(np.abs(cs.Mj[2] - cs.Mj[3]).max()),
    )
    ok = red_err <= 1e-8 and sym_err <= 1e-10
    return ok, f"kappa2=0 reduction {red_err:.2e} (1e-8), A-B symmetry {sym_err:.2e} (1e-10)"


def _check_concurrence_infra():
    werner = 0.5 * np.outer(ops.bell_phi_plus(), ops.bell_phi_plus().conj()) + 0.5 * np.eye(4) / 4
    c = concurrence_of_matrix(werner)
    w_err = abs(c - werner_concurrence(0.5))
    rng = np.random.default_rng(11)
    worst_lu = 0.0
    rho = werner
    for _ in range(5):
        z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        ua, _ = np.linalg.qr(z)
        z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        ub, _ = np.linalg.qr(z)
        u = np.kron(ua, ub)
        worst_lu = max(worst_lu, abs(concurrence_of_matrix(u @ rho @ u.conj().T) - c))
    ok = w_err <= 1e-10 and worst_lu <= 1e-10
    return ok, f"Werner error {w_err:.2e} (1e-10), local-unitary drift {worst_lu:.2e} (1e-10)"


def _check_markov_convergence(K=4000, seed=999):
    grid = TimeGrid(t_max=6.0, dt=0.02)
    devs = []
    max_err = None
    for gamma in (5.0, 20.0, 100.0):
        model = ModelParams(omega_s=1.0, omega=0.5, g=0.5, gamma=gamma, n_qubits=1)
        coeffs = solve_one_qubit_coeffs(model, grid)
        dm = run_ensemble(
            model, coeffs, (model.cavity_kernel(), model.detector_kernel()),
            grid, K, seed, ops.EXCITED,
        )
        pop = population(dm)
        lind = reference.solve_lindblad_oracle(model, grid, ops.EXCITED, kappa=1.0)
        ref = population(lind)
        devs.append(float(np.abs(pop.values - ref.values).max()))
        max_err = pop.stderr
    final_tol = float(np.maximum(0.02, 3.0 * max_err).max())
    ok = devs[0] > devs[1] > devs[2] and devs[2] <= final_tol
    return ok, f"deviations {['%.3f' % d for d in devs]} (decreasing, last <= {final_tol:.3f})"


def validate(level="quick", noise_kernels=None):
    """Run the built-in validation suite; returns a machine-readable report."""
    checks = [
        ("noise-correlation", lambda: _check_noise_statistics(kernels=noise_kernels)),
        ("riccati-closed-form", _check_riccati),
        ("one-qubit-oracle-chain", _check_oracle_chain),
        ("concurrence-infrastructure", _check_concurrence_infra),
    ]
    if level == "full":
        checks += [
            ("two-qubit-reductions", _check_two_qubit_reductions),
            ("markov-convergence", _check_markov_convergence),
        ]
    elif level != "quick":
        raise ConfigError(f"unknown validation level '{level}'", field="level")
    report = {}
    for name, fn in checks:
        try:
            ok, detail = fn()
        except CavityQSDError as e:
            ok, detail = False, f"error: {e}"
        report[name] = {"passed": bool(ok), "detail": detail}
    return report


# --- argument parsing ------------------------------------------------------


def _build_parser():
    p = argparse.ArgumentParser(
        prog="cavityqsd",
        description="Stochastic trajectory simulator for qubits probed through a cavity.",
    )
    sub = p.add_subparsers(dest="verb", required=True)
    runp = sub.add_parser("run", help="run a custom configuration")
    runp.add_argument("config", help="path to an INI config file")
    scen = sub.add_parser("scenario", help="run a bundled preset")
    scen.add_argument("id", choices=sorted(SCENARIOS))
    scen.add_argument("--seed", type=int, default=12345)
    scen.add_argument("--K", type=int, default=None)
    scen.add_argument("--out", default=".")
    val = sub.add_parser("validate", help="run the validation suite")
    val.add_argument("--level", choices=["quick", "full"], default="quick")
    cof = sub.add_parser("coeffs", help="solve and cache coefficient tables")
    cof.add_argument("config", help="path to an INI config file")
    cof.add_argument("--dump", required=True, help="output cache file")
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            with open(args.config) as f:
                config = parse_config(f.read())
            run_scenario(config)
            return 0
        if args.verb == "scenario":
            config = parse_config(f"[model]\nscenario = {args.id}\n")
            config.master_seed = args.seed
            if args.K is not None:
                if args.K < 100:
                    raise ConfigError("ensemble size below minimum (K >= 100)", field="--K")
                config.K = args.K
            config.directory = args.out
            run_scenario(config)
            return 0
        if args.verb == "validate":
            report = validate(args.level)
            failures = 0
            for name, entry in report.items():
                status = "PASS" if entry["passed"] else "FAIL"
                failures += not entry["passed"]
                print(f"{status} {name}: {entry['detail']}")
            return 4 if failures else 0
        if args.verb == "coeffs":
            with open(args.config) as f:
                config = parse_config(f.read())
            coeffs = _solve_coeffs(config.model, config.grid)
            save_coeffs(coeffs, args.dump)
            print(f"wrote {args.dump}")
            return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except CavityQSDError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        print("interrupted; partial outputs removed", file=sys.stderr)
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
