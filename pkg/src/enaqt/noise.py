"""Classical-noise algorithm: unitary trajectories under fluctuating site energies.

Each trajectory evolves a pure state with

    U_s = exp(-i (H dt + sum_j phi_{j,s} P_j))

where P_j is the occupation operator of site j and phi_{j,s} the integrated
energy fluctuation over step s. For white noise phi = delta_eps * sqrt(dt)
with delta_eps ~ Normal(0, omega_j**2); for an Ornstein-Uhlenbeck process the
fluctuation is smooth on the step and phi = delta_eps * dt. The noise average
of the trajectories reproduces site dephasing with gamma_j = omega_j**2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Literal

import numpy as np

from .network import ExcitonNetwork, Register, build_register
from .quantum import NumericalError, hermitian_expm
from .series import SimulationGrid, TrajectoryRecord, reduce_chunks
from .streams import chunk_bounds, run_chunks, trajectory_streams

NoiseKind = Literal["white", "ornstein_uhlenbeck"]
Readout = Literal["exact_probability", "single_shot"]
READOUTS = ("exact_probability", "single_shot")

# time steps per block of pre-drawn random numbers in the ensemble engine
WINDOW = 256


@dataclass(frozen=True)
class NoiseConfig:
    kind: str = "white"
    amplitudes: tuple[float, ...] = ()  # omega_j**2
    correlation_rate: float = 0.0  # Lambda; ignored for white noise

    def __post_init__(self):
        if self.kind not in ("white", "ornstein_uhlenbeck"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        amps = tuple(float(a) for a in np.atleast_1d(self.amplitudes))
        if any(a < 0 or not np.isfinite(a) for a in amps):
            raise ValueError("noise amplitudes must be finite and >= 0")
        if self.correlation_rate < 0:
            raise ValueError("correlation rate must be >= 0")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def white(cls, network: ExcitonNetwork) -> "NoiseConfig":
        """White noise with omega_j**2 = gamma_j."""
        return cls("white", network.gammas)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.array(self.amplitudes))


def sample_white_noise(config: NoiseConfig, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Independent Normal(0, omega_j**2) site-energy fluctuations."""
    std = config.std
    if n is not None and n != len(std):
        std = np.broadcast_to(std, (n,))
    return std * rng.standard_normal(len(std))


def ou_step(prev: np.ndarray, config: NoiseConfig, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Exact Ornstein-Uhlenbeck update preserving the stationary variance omega_j**2."""
    decay = np.exp(-config.correlation_rate * dt)
    g = config.std * rng.standard_normal(len(config.amplitudes))
    return prev * decay + g * np.sqrt(1.0 - decay**2)


def _ou_path(draws: np.ndarray, config: NoiseConfig, dt: float, start=None) -> np.ndarray:
    """OU values for standard-normal ``draws`` of shape (..., steps, N)."""
    decay = np.exp(-config.correlation_rate * dt)
    kick = np.sqrt(1.0 - decay**2)
    g = draws * config.std
    out = np.empty_like(g)
    prev = g[..., 0, :] if start is None else start * decay + g[..., 0, :] * kick
    out[..., 0, :] = prev
    for s in range(1, g.shape[-2]):
        prev = prev * decay + g[..., s, :] * kick
        out[..., s, :] = prev
    return out


def step_propagator(h: np.ndarray, delta_eps, dt: float, mode: str = "exact", site_projectors=None) -> np.ndarray:
    """Short-time propagator for one noise realisation.

    ``exact``: exp(-i(H dt + H_fluc sqrt(dt))). ``split``: exp(-i H dt) exp(-i H_fluc sqrt(dt)),
    with the diagonal factor applied as a phase vector.
    """
    delta_eps = np.asarray(delta_eps, dtype=float)
    if not np.all(np.isfinite(delta_eps)):
        raise ValueError("noise values must be finite")
    dim = h.shape[0]
    if site_projectors is None:
        site_projectors = np.eye(len(delta_eps), dim)
    diag = delta_eps @ site_projectors
    if mode == "exact":
        return hermitian_expm(h * dt + np.diag(diag * np.sqrt(dt)))
    if mode == "split":
        return hermitian_expm(h, dt) * np.exp(-1j * diag * np.sqrt(dt))[None, :]
    raise ValueError(f"unknown propagator mode {mode!r}")


def _phases(config: NoiseConfig, draws: np.ndarray, dt: float, ou_state=None):
    """Integrated fluctuation per step from standard-normal draws (..., steps, N)."""
    if config.kind == "white":
        return draws * config.std * np.sqrt(dt), None
    values = _ou_path(draws, config, dt, ou_state)
    return values * dt, values[..., -1, :]


# --- batched propagation --------------------------------------------------------

def expm_action_batch(h0: np.ndarray, diag: np.ndarray, psi: np.ndarray, tol: float = 2.0**-53) -> np.ndarray:
    """Apply exp(-i(h0 + diag(d_r))) to each row psi_r.

    Small generators use a scaled Taylor series on the vectors; only the
    diagonal differs between rows, so a term costs one shared matrix product.
    Larger ones fall back to a batched Hermitian eigendecomposition.
    """
    norm = float(np.max(np.abs(h0).sum(axis=0))) + float(np.max(np.abs(diag), initial=0.0))
    n_sub = max(1, int(np.ceil(norm / 0.5)))
    if n_sub > 2:
        gen = np.broadcast_to(h0, (len(psi),) + h0.shape).copy()
        idx = np.arange(h0.shape[0])
        gen[:, idx, idx] += diag
        w, v = np.linalg.eigh(gen)
        c = np.einsum("rji,rj->ri", v.conj(), psi)
        return np.einsum("rij,rj->ri", v, np.exp(-1j * w) * c)
    ht = (-1j / n_sub) * np.asarray(h0).T
    dv = (-1j / n_sub) * diag
    for _ in range(n_sub):
        term = psi
        acc = psi.copy()
        for k in range(1, 60):
            term = (term @ ht + dv * term) / k
            acc += term
            if np.max(np.abs(term)) <= tol:
                break
        else:  # pragma: no cover - norm bound makes this unreachable
            raise NumericalError("Taylor series for the propagator did not converge")
        psi = acc
    return psi


def _readout(p: np.ndarray, uniforms: np.ndarray, readout: str) -> np.ndarray:
    if readout == "exact_probability":
        return p
    return np.mean(uniforms < p[..., None], axis=-1)


def _noise_chunk(task, network, noise, grid, source, target, seed, tag, readout, mapping, mode, keep):
    start, stop = task
    reg = build_register(network, mapping)
    n = network.n_sites
    r = stop - start
    S = grid.n_steps
    streams = [trajectory_streams(seed, xi, tag) for xi in range(start, stop)]
    psi = np.repeat(reg.initial_state(source)[None, :], r, axis=0)
    target_proj = reg.site_projectors[target - 1]
    est = np.empty((r, S + 1))
    pops = np.empty((r, S + 1, n)) if keep == "populations" else None
    h0 = reg.hamiltonian * grid.dt
    u0 = hermitian_expm(reg.hamiltonian, grid.dt) if mode == "split" else None
    ou_state = None
    for w0 in range(0, S + 1, WINDOW):
        w1 = min(w0 + WINDOW, S + 1)
        draws = np.stack([g.standard_normal((w1 - w0, n)) for g, _ in streams])
        uniforms = np.stack([u.random((w1 - w0, grid.shots)) for _, u in streams])
        phases, ou_state = _phases(noise, draws, grid.dt, ou_state)
        for s in range(w0, w1):
            if s:
                diag = phases[:, s - w0, :] @ reg.site_projectors
                if mode == "split":
                    psi = (psi * np.exp(-1j * diag)) @ u0.T
                else:
                    psi = expm_action_batch(h0, diag, psi)
            prob = np.abs(psi) ** 2
            est[:, s] = _readout(prob @ target_proj, uniforms[:, s - w0, :], readout)
            if pops is not None:
                pops[:, s, :] = prob @ reg.site_projectors.T
    norm_err = np.max(np.abs(np.sum(np.abs(psi) ** 2, axis=1) - 1.0))
    if norm_err > 1e-9:
        raise NumericalError(f"trajectory norm drifted by {norm_err:.2e}")
    return {
        "count": r,
        "sum": est.sum(axis=0),
        "sumsq": (est**2).sum(axis=0),
        "efficiencies": est.sum(axis=1) * grid.dt,
        "estimates": est if keep else None,
        "populations": pops,
    }


def run_noise_ensemble(
    network: ExcitonNetwork,
    grid: SimulationGrid,
    source: int,
    target: int,
    seed: int,
    noise: NoiseConfig | None = None,
    readout: str = "single_shot",
    mapping: str = "algorithmic",
    mode: str = "exact",
    tag: int = 0,
    workers: int = 1,
    keep: bool | str = False,
    chunk_size: int = 1000,
):
    """Run ``grid.trajectories`` noise trajectories and reduce them in order.

    Trajectory ``xi`` draws from ``trajectory_streams(seed, xi, tag)``, so any
    single trajectory can be replayed with :func:`run_noise_trajectory`.
    """
    noise = NoiseConfig.white(network) if noise is None else noise
    if len(noise.amplitudes) != network.n_sites:
        raise ValueError("noise amplitudes must be given per site")
    if readout not in READOUTS:
        raise ValueError(f"unknown readout {readout!r}")
    fn = partial(
        _noise_chunk, network=network, noise=noise, grid=grid, source=source, target=target,
        seed=seed, tag=tag, readout=readout, mapping=mapping, mode=mode, keep=keep,
    )
    chunks = run_chunks(fn, chunk_bounds(grid.trajectories, chunk_size), workers)
    result = reduce_chunks(grid.times, chunks, source, target, keep=bool(keep))
    if keep == "populations":
        result.populations = np.concatenate([c["populations"] for c in chunks])
    return result


def run_noise_trajectory(
    network: ExcitonNetwork,
    grid: SimulationGrid,
    source: int,
    target: int,
    rng: np.random.Generator,
    noise: NoiseConfig | None = None,
    readout: str = "exact_probability",
    mapping: str = "algorithmic",
    mode: str = "exact",
    readout_rng: np.random.Generator | None = None,
    xi: int = 0,
) -> TrajectoryRecord:
    """One trajectory, propagated step by step with dense propagators.

    Draw order: all (S+1, N) standard normals from ``rng`` (row 0 seeds the OU
    process and is unused for white noise), then (S+1, shots) uniforms from
    ``readout_rng`` (defaults to ``rng``).
    """
    noise = NoiseConfig.white(network) if noise is None else noise
    readout_rng = rng if readout_rng is None else readout_rng
    reg: Register = build_register(network, mapping)
    n = network.n_sites
    S = grid.n_steps
    draws = rng.standard_normal((S + 1, n))
    uniforms = readout_rng.random((S + 1, grid.shots))
    phases, _ = _phases(noise, draws, grid.dt)
    psi = reg.initial_state(source)
    est = np.empty(S + 1)
    pops = np.empty((S + 1, n))
    for s in range(S + 1):
        if s:
            # step_propagator takes delta_eps with the sqrt(dt) weight
            u = step_propagator(reg.hamiltonian, phases[s] / np.sqrt(grid.dt), grid.dt, mode, reg.site_projectors)
            psi = u @ psi
        prob = np.abs(psi) ** 2
        pops[s] = reg.site_projectors @ prob
        est[s] = _readout(pops[s, target - 1], uniforms[s], readout)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-9:
        raise NumericalError("trajectory norm drifted")
    return TrajectoryRecord(xi, est, pops, kind=noise.kind)


def noise_averaged_step(
    rho: np.ndarray,
    network: ExcitonNetwork,
    dt: float,
    samples: int,
    rng: np.random.Generator,
    noise: NoiseConfig | None = None,
    mapping: str = "algorithmic",
    chunk: int = 50_000,
) -> np.ndarray:
    """Monte Carlo average of U rho U^dagger over white-noise realisations of one step."""
    noise = NoiseConfig.white(network) if noise is None else noise
    reg = build_register(network, mapping)
    dim = reg.dim
    acc = np.zeros((dim, dim), dtype=complex)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        eps = rng.standard_normal((m, network.n_sites)) * noise.std
        gen = np.broadcast_to(reg.hamiltonian * dt, (m, dim, dim)).copy()
        gen[:, np.arange(dim), np.arange(dim)] += (eps @ reg.site_projectors) * np.sqrt(dt)
        w, v = np.linalg.eigh(gen)
        u = (v * np.exp(-1j * w)[:, None, :]) @ v.conj().transpose(0, 2, 1)
        acc += np.einsum("rij,jk,rlk->il", u, rho, u.conj())
        done += m
    return acc / samples


def averaged_step_superoperator(
    network: ExcitonNetwork, dt: float, mode: str = "exact", order: int = 16
) -> np.ndarray:
    """Site-basis superoperator E[U . U^dagger] of one white-noise step.

    The Gaussian average over the N site fluctuations is done with a tensor
    Gauss-Hermite rule of ``order`` nodes per site; the integrand is entire in
    the noise, so the rule converges spectrally.
    """
    n = network.n_sites
    if order ** n > 2_000_000:
        raise ValueError("quadrature grid too large; lower the order")
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    grids = np.meshgrid(*([x] * n), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1) * np.sqrt(network.gamma_array)
    weights = np.prod(np.meshgrid(*([w] * n), indexing="ij"), axis=0).reshape(-1)
    h = np.asarray(build_register(network, "algorithmic").hamiltonian[:n, :n])
    if mode == "exact":
        gen = np.broadcast_to(h * dt, (len(nodes), n, n)).copy()
        gen[:, np.arange(n), np.arange(n)] += nodes * np.sqrt(dt)
        vals, vecs = np.linalg.eigh(gen)
        us = (vecs * np.exp(-1j * vals)[:, None, :]) @ vecs.conj().transpose(0, 2, 1)
    elif mode == "split":
        us = hermitian_expm(h, dt)[None] * np.exp(-1j * nodes * np.sqrt(dt))[:, None, :]
    else:
        raise ValueError(f"unknown propagator mode {mode!r}")
    return np.einsum("r,rab,rcd->acbd", weights, us, us.conj()).reshape(n * n, n * n)


def split_gate_sequence(network: ExcitonNetwork, dt: float, phases=None, trotter_steps: int = 1):
    """Physical-mapping gates of one split noise step.

    The noise phase of site j only shifts its RZ angle, so a step costs
    N single-qubit rotations plus two pair rotations per edge and substep.
    """
    from .collision import GateOp

    n = network.n_sites
    phases = np.zeros(n) if phases is None else np.asarray(phases, dtype=float)
    m = trotter_steps
    tau = dt / m
    ops = []
    for sub in range(m):
        # the fluctuation acts once per step; it commutes with the RZ layer
        extra = phases if sub == 0 else np.zeros(n)
        ops += [GateOp("RZ", (j,), -e * tau - extra[j]) for j, e in enumerate(network.energies)]
        for j, k, v in network.edges:
            ops.append(GateOp("RXX", (j - 1, k - 1), v * tau))
            ops.append(GateOp("RYY", (j - 1, k - 1), v * tau))
    return ops
