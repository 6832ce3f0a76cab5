"""Time grids and the population / trajectory containers shared by all solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SimulationGrid:
    """Discretisation knobs: step ``dt``, ``n_steps`` (T = n_steps * dt), ensemble sizes."""

    dt: float
    n_steps: int
    trajectories: int = 1
    shots: int = 1
    trotter_steps: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if self.trajectories < 1 or self.shots < 1 or self.trotter_steps < 1:
            raise ValueError("trajectories, shots and trotter_steps must be >= 1")

    @classmethod
    def from_horizon(cls, horizon: float, dt: float, **kwargs) -> "SimulationGrid":
        n = int(round(horizon / dt))
        if abs(n * dt - horizon) > 1e-9 * max(1.0, abs(horizon)):
            raise ValueError(f"horizon {horizon} is not a whole number of steps of {dt}")
        return cls(dt=dt, n_steps=n, **kwargs)

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass
class PopulationSeries:
    """Site populations p(j, s*dt | j0) for s = 0..S, columns are sites 1..N."""

    times: np.ndarray
    populations: np.ndarray
    source: int
    target: int
    stderr: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def target_population(self) -> np.ndarray:
        return self.populations[:, self.target - 1]

    def site(self, j: int) -> np.ndarray:
        return self.populations[:, j - 1]


@dataclass
class TrajectoryRecord:
    """One unravelling realisation: the per-step target estimator pi_xi(s)."""

    xi: int
    estimates: np.ndarray
    populations: np.ndarray | None = None
    stream: tuple = ()
    kind: str = ""
    bits: np.ndarray | None = None

    def __post_init__(self):
        if np.any(self.estimates < -1e-12) or np.any(self.estimates > 1 + 1e-12):
            raise ValueError("trajectory estimates must lie in [0, 1]")


@dataclass
class EfficiencyCurve:
    gammas: np.ndarray
    efficiencies: np.ndarray
    stderr: np.ndarray | None = None
    reference: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def argmax(self) -> int:
        return int(np.argmax(self.efficiencies))


def transport_efficiency(series, dt: float | None = None) -> float:
    """Left Riemann sum ``sum_{s=0}^{S} p(s) * dt`` of the target population.

    ``series`` is a :class:`PopulationSeries` or a 1-D array of target
    populations; the s = 0 sample is included, so a constant p = 1 over S+1
    samples gives (S+1) * dt.
    """
    if isinstance(series, PopulationSeries):
        p = series.target_population
        dt = series.dt if dt is None else dt
    else:
        p = np.asarray(series, dtype=float)
    if p.size == 0:
        raise ValueError("cannot compute the efficiency of an empty series")
    if dt is None:
        raise ValueError("dt is required for a bare population array")
    return float(np.sum(p) * dt)


@dataclass
class EnsembleResult:
    """Pointwise mean and standard error of a trajectory ensemble."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    efficiencies: np.ndarray  # per-trajectory transport efficiency
    source: int
    target: int
    estimates: np.ndarray | None = None  # (trajectories, S+1) when kept
    bits: list | None = None
    populations: np.ndarray | None = None  # (trajectories, S+1, N) when kept

    @property
    def n(self) -> int:
        return len(self.efficiencies)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def efficiency(self) -> tuple[float, float]:
        """Efficiency of the averaged curve and its standard error across trajectories."""
        eta = transport_efficiency(self.mean, self.dt)
        err = float(np.std(self.efficiencies, ddof=1) / np.sqrt(self.n)) if self.n > 1 else 0.0
        return eta, err


def reduce_chunks(times, chunks, source: int, target: int, keep: bool = False) -> EnsembleResult:
    """Deterministic fold of per-chunk partial sums, in chunk order."""
    n = sum(c["count"] for c in chunks)
    total = np.zeros_like(times, dtype=float)
    total_sq = np.zeros_like(times, dtype=float)
    for c in chunks:
        total += c["sum"]
        total_sq += c["sumsq"]
    mean = total / n
    if n > 1:
        var = np.clip(total_sq - n * mean**2, 0.0, None) / (n - 1)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.zeros_like(mean)
    eff = np.concatenate([c["efficiencies"] for c in chunks])
    est = np.concatenate([c["estimates"] for c in chunks]) if keep else None
    bits = None
    if chunks and chunks[0].get("bits") is not None:
        bits = [b for c in chunks for b in c["bits"]]
    return EnsembleResult(times, mean, stderr, eff, source, target, est, bits)


def ensemble_average(records, dt: float, source: int = 1, target: int = 1) -> EnsembleResult:
    """Mean and standard error over a list of :class:`TrajectoryRecord`."""
    if not records:
        raise ValueError("cannot average an empty ensemble")
    lengths = {len(r.estimates) for r in records}
    if len(lengths) != 1:
        raise ValueError(f"records do not share a time grid (lengths {sorted(lengths)})")
    est = np.array([r.estimates for r in records], dtype=float)
    times = np.arange(est.shape[1]) * dt
    chunk = {
        "count": len(records),
        "sum": est.sum(axis=0),
        "sumsq": (est**2).sum(axis=0),
        "efficiencies": est.sum(axis=1) * dt,
        "estimates": est,
    }
    return reduce_chunks(times, [chunk], source, target, keep=True)
