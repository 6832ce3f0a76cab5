"""Scenario configuration: JSON files mirroring :class:`ScenarioConfig`."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .network import BENCHMARK_RING_ENERGIES, MAPPINGS, TOPOLOGIES, ExcitonNetwork

ALGORITHMS = ("lindblad", "classical_noise", "collision", "collision_algorithmic", "collision_exact")
STOCHASTIC = ("classical_noise", "collision", "collision_algorithmic")
READOUT_KINDS = ("single_shot", "exact_probability")
SEED_MAX = 2**64 - 1


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field (e.g. ``grid.dt``)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class NetworkSpec:
    """Either explicit ``edges`` or a ``topology`` with uniform ``coupling``.

    ``gamma`` applies to every site unless per-site ``gammas`` are given;
    ``file`` points to a JSON document with the same keys.
    """

    energies: list = field(default_factory=lambda: list(BENCHMARK_RING_ENERGIES))
    topology: str | None = "ring"
    coupling: float = 1.0
    edges: list | None = None
    gamma: float = 0.1
    gammas: list | None = None
    file: str | None = None


@dataclass
class GridSpec:
    dt: float = 0.01
    horizon: float = 40.0
    trajectories: int = 200
    shots: int = 1
    trotter_steps: int = 1


@dataclass
class NoiseSpec:
    kind: str = "white"
    correlation_rate: float = 0.0
    mode: str = "exact"


@dataclass
class SweepSpec:
    min: float = 1e-3
    max: float = 1e2
    points: int = 16

    def values(self) -> np.ndarray:
        return np.logspace(np.log10(self.min), np.log10(self.max), self.points)


@dataclass
class ScenarioConfig:
    network: NetworkSpec = field(default_factory=NetworkSpec)
    mapping: str = "physical"
    algorithm: str = "lindblad"
    grid: GridSpec = field(default_factory=GridSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    readout: str = "single_shot"
    source: int = 1
    target: int = 3
    seed: int = 0
    out: str = "out"
    sweep: SweepSpec | None = None
    workers: int = 1
    record_bits: bool = False
    halvings: int = 2
    scaling_sizes: list = field(default_factory=lambda: list(range(4, 13)))
    scaling_topology: str = "ring"

    # --- serialisation ---------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path | None = None) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a JSON object")
        kwargs = _fill(cls, data, "")
        cfg = cls(**kwargs)
        if cfg.network.file:
            cfg.network = _load_network_file(cfg.network.file, base_dir)
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    # --- validation ---------------------------------------------------------------
    def validate(self) -> "ScenarioConfig":
        net = self.build_network()
        n = net.n_sites
        if self.mapping not in MAPPINGS:
            raise ConfigError("mapping", f"must be one of {MAPPINGS}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm", f"must be one of {ALGORITHMS}")
        if self.readout not in READOUT_KINDS:
            raise ConfigError("readout", f"must be one of {READOUT_KINDS}")
        for name in ("source", "target"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= n:
                raise ConfigError(name, f"must be a site index in 1..{n}, got {v!r}")
        g = self.grid
        if not _positive(g.dt):
            raise ConfigError("grid.dt", f"must be positive, got {g.dt!r}")
        if not _positive(g.horizon) and g.horizon != 0:
            raise ConfigError("grid.horizon", f"must be >= 0, got {g.horizon!r}")
        steps = g.horizon / g.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigError("grid.horizon", f"{g.horizon} is not a whole number of steps of {g.dt}")
        for name in ("trajectories", "shots", "trotter_steps"):
            v = getattr(g, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"grid.{name}", f"must be an integer >= 1, got {v!r}")
        if self.noise.kind not in ("white", "ornstein_uhlenbeck"):
            raise ConfigError("noise.kind", "must be 'white' or 'ornstein_uhlenbeck'")
        if self.noise.mode not in ("exact", "split"):
            raise ConfigError("noise.mode", "must be 'exact' or 'split'")
        if not (self.noise.correlation_rate >= 0):
            raise ConfigError("noise.correlation_rate", "must be >= 0")
        if self.noise.kind == "ornstein_uhlenbeck" and self.noise.correlation_rate == 0:
            raise ConfigError("noise.correlation_rate", "must be positive for Ornstein-Uhlenbeck noise")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed <= SEED_MAX:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if self.sweep is not None:
            sw = self.sweep
            if not (_positive(sw.min) and _positive(sw.max)):
                raise ConfigError("sweep.min", "sweep bounds must be positive")
            if not isinstance(sw.points, int) or sw.points < 2:
                raise ConfigError("sweep.points", "need at least two points")
            if not sw.max > sw.min:
                raise ConfigError("sweep.max", "must exceed sweep.min (grid strictly increasing)")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", "must be an integer >= 1")
        if not isinstance(self.halvings, int) or self.halvings < 1:
            raise ConfigError("halvings", "must be an integer >= 1")
        if any((not isinstance(v, int)) or v < 2 for v in self.scaling_sizes):
            raise ConfigError("scaling_sizes", "site counts must be integers >= 2")
        if self.scaling_topology not in TOPOLOGIES:
            raise ConfigError("scaling_topology", f"must be one of {tuple(TOPOLOGIES)}")
        return self

    # --- derived objects ------------------------------------------------------------
    def build_network(self, gamma: float | None = None) -> ExcitonNetwork:
        spec = self.network
        energies = spec.energies
        if not isinstance(energies, list) or not energies:
            raise ConfigError("network.energies", "must be a non-empty list of numbers")
        n = len(energies)
        if spec.edges is not None:
            try:
                edges = [(int(a), int(b), float(v)) for a, b, v in spec.edges]
            except (TypeError, ValueError):
                raise ConfigError("network.edges", "entries must be [j, k, V] triples") from None
        else:
            if spec.topology not in TOPOLOGIES:
                raise ConfigError("network.topology", f"must be one of {tuple(TOPOLOGIES)}")
            edges = TOPOLOGIES[spec.topology](n, spec.coupling)
        if gamma is not None:
            gammas = gamma
        elif spec.gammas is not None:
            if len(spec.gammas) != n:
                raise ConfigError("network.gammas", f"needs {n} entries")
            gammas = spec.gammas
        else:
            gammas = spec.gamma
        if np.any(np.asarray(gammas, dtype=float) < 0):
            raise ConfigError("network.gamma", "dephasing rates must be >= 0")
        try:
            return ExcitonNetwork(energies, edges, gammas)
        except ValueError as exc:
            raise ConfigError("network", str(exc)) from None

    @property
    def n_steps(self) -> int:
        return int(round(self.grid.horizon / self.grid.dt))


def _positive(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x) and x > 0


_NESTED = {"network": NetworkSpec, "grid": GridSpec, "noise": NoiseSpec, "sweep": SweepSpec}


def _fill(cls, data: dict, prefix: str) -> dict:
    known = {f.name for f in fields(cls)}
    out = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(path, "unknown field")
        sub = _NESTED.get(key) if cls is ScenarioConfig else None
        if sub is not None and value is not None:
            if not isinstance(value, dict):
                raise ConfigError(path, "expected an object")
            value = sub(**_fill(sub, value, path + "."))
        out[key] = value
    return out


def _load_network_file(path: str, base_dir) -> NetworkSpec:
    p = Path(path)
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("network.file", f"cannot read {p}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("network.file", "expected a JSON object")
    data = {k: v for k, v in data.items() if k != "file"}
    return NetworkSpec(**_fill(NetworkSpec, data, "network.file."))


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {p}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return ScenarioConfig.from_dict(data, base_dir=p.parent)
