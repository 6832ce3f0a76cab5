"""Scenario runners behind the command line: dynamics, sweeps, swarms, replay, reports.

Every runner writes CSV files plus a ``manifest.json`` (config echo, library
version, wall-clock time, SHA-256 of each output) into ``config.out``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .collision import (
    CollisionConfig,
    iterate_collision_map,
    pack_bits,
    replay_recorded,
    run_algorithmic_collision_ensemble,
    run_collision_ensemble,
    trotter_gate_sequence,
    unpack_bits,
)
from .config import STOCHASTIC, ConfigError, ScenarioConfig
from .lindblad import integrate_master_equation, qubit_form_problem, reference_series, site_problem
from .network import TOPOLOGIES, ExcitonNetwork, algorithmic_qubits
from .noise import NoiseConfig, run_noise_ensemble, split_gate_sequence
from .series import SimulationGrid, transport_efficiency
from .streams import scenario_tag


@dataclass
class AlgorithmRun:
    times: np.ndarray
    mean: np.ndarray  # target population (ensemble mean for stochastic runs)
    stderr: np.ndarray | None
    eta: float
    eta_stderr: float | None
    estimates: np.ndarray | None = None
    populations: np.ndarray | None = None
    bits: list | None = None


def noise_config_for(config: ScenarioConfig, network: ExcitonNetwork, dt: float) -> NoiseConfig:
    """White noise uses omega_j**2 = gamma_j; OU noise uses the matched per-step variance gamma_j / dt."""
    if config.noise.kind == "white":
        return NoiseConfig.white(network)
    return NoiseConfig("ornstein_uhlenbeck", tuple(network.gamma_array / dt), config.noise.correlation_rate)


def collision_config_for(config: ScenarioConfig, network: ExcitonNetwork, dt: float) -> CollisionConfig:
    mapping = "algorithmic" if config.algorithm == "collision_algorithmic" else "physical"
    return CollisionConfig.from_network(network, dt, config.grid.trotter_steps, mapping)


def run_algorithm(
    config: ScenarioConfig,
    network: ExcitonNetwork,
    dt: float | None = None,
    n_steps: int | None = None,
    trajectories: int | None = None,
    keep: bool | str = False,
    record_bits: bool = False,
    tag: int | None = None,
    readout: str | None = None,
) -> AlgorithmRun:
    """Run the configured algorithm once on ``network``."""
    dt = config.grid.dt if dt is None else dt
    n_steps = config.n_steps if n_steps is None else n_steps
    trajectories = config.grid.trajectories if trajectories is None else trajectories
    readout = config.readout if readout is None else readout
    grid = SimulationGrid(dt, n_steps, trajectories, config.grid.shots, config.grid.trotter_steps)
    src, tgt = config.source, config.target
    algo = config.algorithm
    if tag is None:
        tag = scenario_tag(algo, network.gammas)
    if algo == "lindblad":
        problem = qubit_form_problem(network, src, tgt) if config.mapping == "physical" else site_problem(network, src, tgt)
        series = integrate_master_equation(problem, grid).series
        p = series.target_population
        return AlgorithmRun(grid.times, p, None, transport_efficiency(p, dt), None, populations=series.populations)
    if algo == "collision_exact":
        series = iterate_collision_map(network, collision_config_for(config, network, dt), grid, src, tgt)
        p = series.target_population
        return AlgorithmRun(grid.times, p, None, transport_efficiency(p, dt), None, populations=series.populations)
    if algo == "classical_noise":
        res = run_noise_ensemble(
            network, grid, src, tgt, config.seed, noise_config_for(config, network, dt), readout,
            config.mapping, config.noise.mode, tag, config.workers, keep,
        )
    elif algo == "collision":
        res = run_collision_ensemble(
            network, collision_config_for(config, network, dt), grid, src, tgt, config.seed, readout,
            tag, config.workers, keep, record_bits,
        )
    elif algo == "collision_algorithmic":
        res = run_algorithmic_collision_ensemble(
            network, collision_config_for(config, network, dt), grid, src, tgt, config.seed, readout,
            tag, config.workers, keep,
        )
    else:  # validated earlier
        raise ConfigError("algorithm", f"unknown algorithm {algo!r}")
    eta, err = res.efficiency()
    return AlgorithmRun(res.times, res.mean, res.stderr, eta, err, res.estimates, res.populations, res.bits)


def oracle_target(config: ScenarioConfig, network: ExcitonNetwork, dt: float | None = None, n_steps: int | None = None) -> np.ndarray:
    dt = config.grid.dt if dt is None else dt
    n_steps = config.n_steps if n_steps is None else n_steps
    return reference_series(network, config.source, config.target, SimulationGrid(dt, n_steps)).target_population


# --- output plumbing -----------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, config: ScenarioConfig, outputs, started: float, extra=None) -> Path:
    manifest = {
        "command": command,
        "config": config.to_dict(),
        "version": __version__,
        "numpy_version": np.__version__,
        "seed": config.seed,
        "started_unix": started,
        "wall_clock_s": time.time() - started,
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def _outdir(config: ScenarioConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- subcommands -------------------------------------------------------------------------

def run_dynamics(config: ScenarioConfig) -> dict:
    """Target-site time series of the configured algorithm with the oracle overlay."""
    started = time.time()
    out = _outdir(config)
    net = config.build_network()
    run = run_algorithm(config, net)
    oracle = oracle_target(config, net)
    stderr = run.stderr if run.stderr is not None else [None] * len(run.times)
    path = out / "dynamics.csv"
    write_csv(
        path, ["s", "t", "p_target", "stderr", "p_oracle"],
        zip(range(len(run.times)), run.times, run.mean, stderr, oracle),
    )
    summary = {"eta": run.eta, "eta_stderr": run.eta_stderr, "eta_oracle": transport_efficiency(oracle, config.grid.dt)}
    write_manifest(out, "dynamics", config, [path], started, {"summary": summary})
    return {"path": path, "run": run, "oracle": oracle, **summary}


def run_sweep(config: ScenarioConfig) -> dict:
    """Transport efficiency of the algorithm and the oracle across the gamma/V grid."""
    if config.sweep is None:
        raise ConfigError("sweep", "the sweep subcommand needs a sweep specification")
    started = time.time()
    out = _outdir(config)
    gammas = config.sweep.values()
    rows = []
    for g in gammas:
        net = config.build_network(gamma=float(g))
        oracle_eta = transport_efficiency(oracle_target(config, net), config.grid.dt)
        if config.algorithm == "lindblad":
            rows.append((g, oracle_eta, oracle_eta, None))
            continue
        run = run_algorithm(config, net, tag=scenario_tag(config.algorithm, "sweep", float(g)))
        rows.append((g, run.eta, oracle_eta, run.eta_stderr))
    path = out / "sweep.csv"
    write_csv(path, ["gamma", "eta_algo", "eta_oracle", "stderr"], rows)
    write_manifest(out, "sweep", config, [path], started)
    arr = np.array([[r[0], r[1], r[2], np.nan if r[3] is None else r[3]] for r in rows])
    return {"path": path, "gammas": arr[:, 0], "eta": arr[:, 1], "eta_oracle": arr[:, 2], "stderr": arr[:, 3]}


def run_trajectories(config: ScenarioConfig, count: int | None = None, record_bits: bool | None = None) -> dict:
    """Per-trajectory swarm, ensemble mean with oracle overlay, optional reset-outcome dumps."""
    if config.algorithm not in STOCHASTIC:
        raise ConfigError("algorithm", f"trajectories need a stochastic algorithm {STOCHASTIC}")
    record_bits = config.record_bits if record_bits is None else record_bits
    if record_bits and config.algorithm != "collision":
        raise ConfigError("record_bits", "only the collision circuit records reset outcomes")
    started = time.time()
    out = _outdir(config)
    net = config.build_network()
    count = config.grid.trajectories if count is None else count
    run = run_algorithm(config, net, trajectories=count, keep="populations", record_bits=record_bits)
    oracle = oracle_target(config, net)
    tgt = config.target - 1
    swarm = out / "trajectories.csv"
    write_csv(
        swarm, ["xi", "s", "t", "p_target", "estimate"],
        (
            (xi, s, t, run.populations[xi, s, tgt], run.estimates[xi, s])
            for xi in range(count)
            for s, t in enumerate(run.times)
        ),
    )
    ens = out / "ensemble.csv"
    write_csv(
        ens, ["s", "t", "mean", "stderr", "p_oracle"],
        zip(range(len(run.times)), run.times, run.mean, run.stderr, oracle),
    )
    outputs = [swarm, ens]
    if record_bits:
        dump = out / "bits.txt"
        dump.write_text(format_bit_dump(config, net, run.bits))
        outputs.append(dump)
    write_manifest(out, "trajectories", config, outputs, started)
    return {"swarm": swarm, "ensemble": ens, "run": run, "oracle": oracle, "outputs": outputs}


BIT_ORDER = "step-major, then Trotter substep, then site ascending; hex is MSB-first, zero padded"


def format_bit_dump(config: ScenarioConfig, network: ExcitonNetwork, bits) -> str:
    """One header line ``# {json}`` then one ``xi n_bits hex`` line per run."""
    meta = {
        "config": config.to_dict(),
        "n_sites": network.n_sites,
        "n_steps": config.n_steps,
        "trotter_steps": config.grid.trotter_steps,
        "order": BIT_ORDER,
    }
    lines = ["# " + json.dumps(meta, sort_keys=True)]
    lines += [f"{xi} {len(b)} {pack_bits(b)}" for xi, b in enumerate(bits)]
    return "\n".join(lines) + "\n"


def parse_bit_dump(text: str) -> tuple[dict, list[dict]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# "):
        raise ValueError("bit dump must start with a '# {json}' header line")
    meta = json.loads(lines[0][2:])
    runs = []
    for ln in lines[1:]:
        xi, n_bits, hexstr = ln.split()
        runs.append({"xi": int(xi), "n_bits": int(n_bits), "hex": hexstr})
    return meta, runs


def replay(bits_path: str | Path, out: str | Path, xi: int | None = None) -> dict:
    """Regenerate recorded collision trajectories from a ``bits.txt`` dump.

    Writes ``replay.csv`` with the ``xi, s, t, p_target`` columns of the
    original swarm file; values are bitwise identical to the recording.
    """
    started = time.time()
    try:
        meta, runs = parse_bit_dump(Path(bits_path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError("--bits", f"cannot read bit dump {bits_path}: {exc}") from None
    config = ScenarioConfig.from_dict(meta["config"])
    config.out = str(out)
    net = config.build_network()
    if xi is not None:
        runs = [r for r in runs if r["xi"] == xi]
        if not runs:
            raise ConfigError("--xi", f"no run {xi} in {bits_path}")
    bits = np.array([unpack_bits(r["hex"], r["n_bits"]) for r in runs])
    cc = collision_config_for(config, net, config.grid.dt)
    grid = SimulationGrid(config.grid.dt, config.n_steps, len(runs), config.grid.shots, config.grid.trotter_steps)
    pops = replay_recorded(net, cc, grid, config.source, config.target, bits)
    outdir = _outdir(config)
    path = outdir / "replay.csv"
    tgt = config.target - 1
    write_csv(
        path, ["xi", "s", "t", "p_target"],
        ((r["xi"], s, t, pops[i, s, tgt]) for i, r in enumerate(runs) for s, t in enumerate(grid.times)),
    )
    write_manifest(outdir, "replay", config, [path], started, {"bits_file": str(bits_path)})
    return {"path": path, "populations": pops, "xis": [r["xi"] for r in runs]}


def convergence_report(config: ScenarioConfig, halvings: int | None = None) -> dict:
    """Rerun at dt, dt/2, ...; report the change of the target curve and the fitted order."""
    halvings = config.halvings if halvings is None else halvings
    if halvings < 1:
        raise ConfigError("halvings", "must be >= 1")
    started = time.time()
    out = _outdir(config)
    net = config.build_network()
    levels = []
    for k in range(halvings + 1):
        dt = config.grid.dt / 2**k
        run = run_algorithm(config, net, dt=dt, n_steps=config.n_steps * 2**k, tag=scenario_tag(config.algorithm, "converge"))
        levels.append((dt, run.mean[:: 2**k], run.eta))
    changes = [None] + [float(np.max(np.abs(levels[k][1] - levels[k - 1][1]))) for k in range(1, len(levels))]
    order = fit_order([lv[0] for lv in levels[1:]], changes[1:])
    path = out / "converge.csv"
    write_csv(
        path, ["level", "dt", "eta", "max_change"],
        ((k, lv[0], lv[2], changes[k]) for k, lv in enumerate(levels)),
    )
    write_manifest(out, "converge", config, [path], started, {"fitted_order": order})
    return {"path": path, "dts": [lv[0] for lv in levels], "changes": changes, "order": order}


def fit_order(dts, changes) -> float | None:
    """Slope of log(change) against log(dt); None with fewer than two usable levels."""
    pts = [(math.log(d), math.log(c)) for d, c in zip(dts, changes) if c and c > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


# --- resource scaling ---------------------------------------------------------------

def _count(ops) -> dict:
    resets = sum(op.kind == "Reset" for op in ops)
    two = sum(len(op.targets) == 2 for op in ops)
    return {"gates": len(ops), "single_qubit": len(ops) - two - resets, "two_qubit": two, "resets": resets}


def scaling_rows(sizes, topology: str, mapping: str, algorithms, trotter_steps: int = 1) -> list[dict]:
    """Qubit and per-block gate counts.

    Physical mapping: counted from the generated gate sequences. Algorithmic
    mapping: closed-form dense-decomposition bounds, 4**n for the Hamiltonian
    factor and 2**k for a diagonal factor on k qubits; these are labelled estimates.
    """
    rows = []
    for n_sites in sizes:
        net = ExcitonNetwork([0.0] * n_sites, TOPOLOGIES[topology](n_sites), 0.1)
        n_edges = len(net.edges)
        nq = algorithmic_qubits(n_sites)
        for algo in algorithms:
            row = {"N": n_sites, "topology": topology, "edges": n_edges, "mapping": mapping, "algorithm": algo}
            if mapping == "physical":
                if algo == "collision":
                    ops = trotter_gate_sequence(net, CollisionConfig.from_network(net, 0.01, trotter_steps))
                    row["qubits"] = n_sites + 1
                else:
                    ops = split_gate_sequence(net, 0.01, trotter_steps=trotter_steps)
                    row["qubits"] = n_sites
                row.update(_count(ops), kind="measured")
            else:
                if algo == "collision":
                    gates = 4**nq + n_sites * 2 ** (nq + 1)
                    row["qubits"] = nq + 1
                    resets = n_sites
                else:
                    gates = 4**nq + 2**nq
                    row["qubits"] = nq
                    resets = 0
                row.update(gates=gates, single_qubit=None, two_qubit=None, resets=resets, kind="estimate")
            rows.append(row)
    return rows


def fit_r2(x, y, degree: int) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) <= degree + 1:
        raise ValueError(f"a degree-{degree} fit needs more than {degree + 1} points")
    coef = np.polyfit(x, y, degree)
    resid = y - np.polyval(coef, x)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return 1.0 if ss_tot == 0 else float(1 - np.sum(resid**2) / ss_tot)


def scaling_report(config: ScenarioConfig) -> dict:
    started = time.time()
    out = _outdir(config)
    algos = {"classical_noise": ["classical_noise"], "collision": ["collision"], "collision_algorithmic": ["collision"]}
    algorithms = algos.get(config.algorithm, ["classical_noise", "collision"])
    mapping = "algorithmic" if config.algorithm == "collision_algorithmic" else config.mapping
    rows = scaling_rows(config.scaling_sizes, config.scaling_topology, mapping, algorithms, config.grid.trotter_steps)
    keys = ["N", "topology", "edges", "mapping", "algorithm", "qubits", "gates", "single_qubit", "two_qubit", "resets", "kind"]
    path = out / "scaling.csv"
    write_csv(path, keys, ([r[k] for k in keys] for r in rows))
    write_manifest(out, "scaling", config, [path], started)
    return {"path": path, "rows": rows}
