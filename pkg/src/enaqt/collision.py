"""Collision algorithm: site dephasing from repeated system-ancilla collisions.

Two routes are provided. The exact route builds the collision unitary with one
fresh ancilla per site and traces the ancillae out (a CPTP map on the system).
The circuit route runs the first-order Trotterised gate sequence on the system
register plus a single ancilla that is measured and reset after every
collision; each run is one quantum trajectory whose reset outcomes can be
recorded and replayed deterministically.

Register layout: system qubits 0..N-1 (site j on qubit j-1), the ancilla last.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .network import ExcitonNetwork, build_register, qubit_hamiltonian, pauli_sum_matrix
from .quantum import (
    X,
    Z,
    apply_to_batch,
    apply_unitary,
    embed,
    hermitian_expm,
    measure_and_reset,
    measure_and_reset_batch,
    pauli_operator,
    rxx,
    ryy,
    rz,
    rzx,
    trace_out_ancilla,
)
from .series import PopulationSeries, SimulationGrid, TrajectoryRecord, reduce_chunks
from .streams import chunk_bounds, run_chunks, trajectory_rng

MAX_DENSE_QUBITS = 14
WINDOW = 256


@dataclass(frozen=True)
class CollisionConfig:
    couplings: tuple[float, ...]
    dt: float
    trotter_steps: int = 1
    mapping: str = "physical"

    def __post_init__(self):
        c = tuple(float(x) for x in np.atleast_1d(self.couplings))
        if any(x < 0 or not np.isfinite(x) for x in c):
            raise ValueError("couplings must be finite and >= 0")
        if self.dt <= 0:
            raise ValueError("collision time must be positive")
        if self.trotter_steps < 1:
            raise ValueError("trotter_steps must be >= 1")
        if self.mapping not in ("physical", "algorithmic"):
            raise ValueError(f"unknown mapping {self.mapping!r}")
        object.__setattr__(self, "couplings", c)

    @classmethod
    def from_network(cls, network: ExcitonNetwork, dt: float, trotter_steps: int = 1, mapping: str = "physical"):
        """Couplings reproducing the network's dephasing rates.

        Physical mapping (Z (x) X interaction, ancilla in |0>): c_j**2 dt = gamma_j / 4.
        Algorithmic mapping (|j><j| (x) Z, ancilla in I/2): c_j**2 dt = gamma_j.
        """
        g = network.gamma_array
        rates = g / 4 if mapping == "physical" else g
        return cls(tuple(np.sqrt(rates / dt)), dt, trotter_steps, mapping)

    @property
    def rates(self) -> np.ndarray:
        return np.array(self.couplings) ** 2 * self.dt

    @property
    def flip_probabilities(self) -> np.ndarray:
        """Probability that one (RZX, reset) pair applies Z: sin^2(c dt / m)."""
        return np.sin(np.array(self.couplings) * self.dt / self.trotter_steps) ** 2


@dataclass(frozen=True)
class GateOp:
    kind: str
    targets: tuple[int, ...]
    angle: float = 0.0
    phases: tuple[float, ...] = field(default=())  # DiagonalPhase only

    _ARITY = {"X": 1, "Z": 1, "RZ": 1, "Identity": 1, "Reset": 1, "RXX": 2, "RYY": 2, "RZX": 2}

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        want = self._ARITY.get(self.kind)
        if self.kind == "DiagonalPhase":
            if len(self.phases) != 1 << len(self.targets):
                raise ValueError("DiagonalPhase needs 2**k phases for k targets")
        elif want is None:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        elif len(self.targets) != want:
            raise ValueError(f"{self.kind} acts on {want} qubit(s), got targets {self.targets}")

    @property
    def is_unitary(self) -> bool:
        return self.kind != "Reset"

    def matrix(self) -> np.ndarray:
        k = self.kind
        if k == "X":
            return X
        if k == "Z":
            return Z
        if k == "Identity":
            return np.eye(2, dtype=complex)
        if k == "RZ":
            return rz(self.angle)
        if k == "RXX":
            return rxx(self.angle)
        if k == "RYY":
            return ryy(self.angle)
        if k == "RZX":
            return rzx(self.angle)
        if k == "DiagonalPhase":
            return np.diag(np.exp(-1j * np.array(self.phases)))
        raise ValueError("Reset has no unitary matrix")


# --- exact (dilated) collision map ---------------------------------------------

def collision_hamiltonian(network: ExcitonNetwork, config: CollisionConfig, n_ancillae: int | None = None) -> np.ndarray:
    """H_ex (x) I + sum_j c_j Z_j (x) X_{a_j} on N + n_ancillae qubits.

    With N ancillae site j couples to its own ancilla; with one ancilla every
    site couples to the same one.
    """
    n = network.n_sites
    n_anc = n if n_ancillae is None else n_ancillae
    if n_anc not in (1, n):
        raise ValueError("use one ancilla per site or a single shared ancilla")
    total = n + n_anc
    if total > MAX_DENSE_QUBITS:
        raise ValueError(f"{total} qubits exceeds the dense-storage limit of {MAX_DENSE_QUBITS}")
    h = np.kron(pauli_sum_matrix(qubit_hamiltonian(network), n), np.eye(1 << n_anc))
    for j, c in enumerate(config.couplings):
        if c:
            anc = n + (j if n_anc == n else 0)
            h += c * pauli_operator([(j, "Z"), (anc, "X")], total)
    return h


def collision_kraus(network: ExcitonNetwork, config: CollisionConfig) -> np.ndarray:
    """Kraus operators <k|U|0> of one collision, shape (2**N, 2**N, 2**N)."""
    n = network.n_sites
    d = 1 << n
    u = hermitian_expm(collision_hamiltonian(network, config), config.dt)
    u4 = u.reshape(d, d, d, d)  # (sys_out, anc_out, sys_in, anc_in)
    return np.transpose(u4[:, :, :, 0], (1, 0, 2))


def collision_superoperator(network: ExcitonNetwork, config: CollisionConfig) -> np.ndarray:
    """Row-major superoperator of one collision: vec(Phi[rho]) = S vec(rho)."""
    kraus = collision_kraus(network, config)
    return sum(np.kron(k, k.conj()) for k in kraus)


def exact_collision_map(rho_s: np.ndarray, network: ExcitonNetwork, config: CollisionConfig) -> np.ndarray:
    """Tr_a{U (rho_S (x) |0..0><0..0|) U^dagger} with U = exp(-i H_CM dt)."""
    n = network.n_sites
    d = 1 << n
    if rho_s.shape != (d, d):
        raise ValueError(f"system state must be {d}x{d}")
    u = hermitian_expm(collision_hamiltonian(network, config), config.dt)
    anc0 = np.zeros((d, d))
    anc0[0, 0] = 1.0
    full = u @ np.kron(rho_s, anc0) @ u.conj().T
    for q in range(2 * n - 1, n - 1, -1):
        full = trace_out_ancilla(full, q)
    return full


def choi_matrix(superop: np.ndarray) -> np.ndarray:
    """Choi matrix sum_ab |a><b| (x) Phi(|a><b|) of a row-major superoperator."""
    d = int(round(np.sqrt(superop.shape[0])))
    choi = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            e = np.zeros(d * d, dtype=complex)
            e[a * d + b] = 1.0
            out = (superop @ e).reshape(d, d)
            choi[a * d:(a + 1) * d, b * d:(b + 1) * d] = out
    return choi


def iterate_collision_map(
    network: ExcitonNetwork, config: CollisionConfig, grid: SimulationGrid, source: int, target: int
) -> PopulationSeries:
    """Site populations under S repeated exact collisions."""
    n = network.n_sites
    reg = build_register(network, "physical")
    sup = collision_superoperator(network, config)
    d = reg.dim
    x = np.outer(reg.initial_state(source), reg.initial_state(source).conj()).reshape(-1)
    diag_idx = reg.site_index * (d + 1)
    pops = np.empty((grid.n_steps + 1, n))
    for s in range(grid.n_steps + 1):
        if s:
            x = sup @ x
        pops[s] = x[diag_idx].real
    return PopulationSeries(grid.times, pops, source, target)


# --- gate sequences -------------------------------------------------------------

def trotter_gate_sequence(network: ExcitonNetwork, config: CollisionConfig) -> list[GateOp]:
    """One evolution block: m first-order Trotter substeps with a single reset ancilla."""
    n = network.n_sites
    m = config.trotter_steps
    tau = config.dt / m
    anc = n
    ops: list[GateOp] = []
    for _ in range(m):
        ops += [GateOp("RZ", (j,), -e * tau) for j, e in enumerate(network.energies)]
        for j, k, v in network.edges:
            ops.append(GateOp("RXX", (j - 1, k - 1), v * tau))
            ops.append(GateOp("RYY", (j - 1, k - 1), v * tau))
        for j, c in enumerate(config.couplings):
            ops.append(GateOp("RZX", (j, anc), 2 * c * tau))
            ops.append(GateOp("Reset", (anc,)))
    return ops


def replay_gate_sequence(network: ExcitonNetwork, config: CollisionConfig, block_bits) -> list[GateOp]:
    """The block with each (RZX, Reset) pair replaced by Identity (bit 0) or Z (bit 1)."""
    block_bits = list(block_bits)
    if len(block_bits) != network.n_sites * config.trotter_steps:
        raise ValueError("need N*m bits per block")
    out: list[GateOp] = []
    bits = iter(block_bits)
    for op in trotter_gate_sequence(network, config):
        if op.kind == "RZX":
            out.append(GateOp("Z" if next(bits) else "Identity", (op.targets[0],)))
        elif op.kind != "Reset":
            out.append(op)
    return out


def sequence_unitary(ops, n_qubits: int) -> np.ndarray:
    """Dense product of a reset-free gate list (later gates act last)."""
    u = np.eye(1 << n_qubits, dtype=complex)
    for op in ops:
        if not op.is_unitary:
            raise ValueError("sequence contains a reset")
        u = embed(op.matrix(), op.targets, n_qubits) @ u
    return u


def deferred_reset_unitary(network: ExcitonNetwork, config: CollisionConfig) -> np.ndarray:
    """Trotter block on the N-ancilla register, each site colliding with its own ancilla.

    This is the sequence with resets deferred to the end of the block, directly
    comparable with exp(-i H_CM dt).
    """
    n = network.n_sites
    ops = []
    for op in trotter_gate_sequence(network, config):
        if op.kind == "Reset":
            continue
        if op.kind == "RZX":
            op = GateOp("RZX", (op.targets[0], n + op.targets[0]), op.angle)
        ops.append(op)
    return sequence_unitary(ops, 2 * n)


# --- circuit trajectories ---------------------------------------------------------

def _segments(ops, n_qubits: int):
    """Fuse runs of unitary gates into dense matrices; resets stay separate."""
    segs, run = [], []
    for op in ops:
        if op.is_unitary:
            run.append(op)
        else:
            if run:
                segs.append(("U", sequence_unitary(run, n_qubits)))
                run = []
            segs.append(("R", op.targets[0]))
    if run:
        segs.append(("U", sequence_unitary(run, n_qubits)))
    return segs


def _site_masks(n_sites: int, n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    return np.array([(idx >> (n_qubits - j)) & 1 for j in range(1, n_sites + 1)], dtype=float)


def _shots(p, uniforms, readout):
    if readout == "exact_probability":
        return p
    return np.mean(uniforms < p[..., None], axis=-1)


def run_collision_circuit(
    network: ExcitonNetwork,
    config: CollisionConfig,
    grid: SimulationGrid,
    source: int,
    target: int,
    rng: np.random.Generator,
    readout: str = "exact_probability",
    record_bits: bool = True,
    xi: int = 0,
) -> TrajectoryRecord:
    """Gate-by-gate statevector run of the single-ancilla collision circuit.

    Draw order from ``rng``: ``shots`` uniforms for the s = 0 readout, then per
    block one uniform per reset followed by ``shots`` readout uniforms.
    """
    n = network.n_sites
    nq = n + 1
    ops = trotter_gate_sequence(network, config)
    masks = _site_masks(n, nq)
    psi = np.zeros(1 << nq, dtype=complex)
    psi[0] = 1.0
    psi = apply_unitary(psi, X, [source - 1], nq)
    est = np.empty(grid.n_steps + 1)
    pops = np.empty((grid.n_steps + 1, n))
    bits = []
    for s in range(grid.n_steps + 1):
        if s:
            for op in ops:
                if op.kind == "Reset":
                    psi, b = measure_and_reset(psi, op.targets[0], rng)
                    bits.append(b)
                else:
                    psi = apply_unitary(psi, op.matrix(), op.targets, nq)
        pops[s] = masks @ (np.abs(psi) ** 2)
        est[s] = _shots(pops[s, target - 1], rng.random(grid.shots), readout)
    return TrajectoryRecord(
        xi, est, pops, kind="collision",
        bits=np.array(bits, dtype=np.int8) if record_bits else None,
    )


def _rowwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b.T with per-row arithmetic independent of the batch size (slower than BLAS)."""
    return np.einsum("rk,jk->rj", a, b, optimize=False)


def _blas(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b.T


def _collision_chunk(task, network, config, grid, source, target, seed, tag, readout, keep, record_bits, forced=None):
    """Propagate runs ``start..stop`` of the circuit ensemble.

    With ``forced`` (recorded outcome strings, one row per run) the resets are
    driven by the recorded bits instead of random draws. Recording and forced
    replay both use batch-size independent arithmetic, so a replay reproduces
    the recorded floats exactly.
    """
    start, stop = task
    n = network.n_sites
    nq = n + 1
    r = stop - start
    S = grid.n_steps
    nm = n * config.trotter_steps
    mul = _rowwise if (record_bits or forced is not None) else _blas
    segs = _segments(trotter_gate_sequence(network, config), nq)
    masks = _site_masks(n, nq)
    psi = np.zeros((r, 1 << nq), dtype=complex)
    psi[:, 1 << (nq - source)] = 1.0
    est = np.empty((r, S + 1))
    pops = np.empty((r, S + 1, n)) if keep == "populations" else None
    bits = np.empty((r, S * nm), dtype=np.int8) if record_bits else None
    if forced is None:
        rngs = [trajectory_rng(seed, xi, tag) for xi in range(start, stop)]
        u_first = np.stack([g.random(grid.shots) for g in rngs])
    else:
        forced = np.asarray(forced, dtype=np.int8)[start:stop]
        if forced.shape != (r, S * nm):
            raise ValueError(f"expected {S * nm} recorded bits per run, got {forced.shape[1:]}")
        u_first = np.zeros((r, grid.shots))
    for w0 in range(0, S + 1, WINDOW):
        w1 = min(w0 + WINDOW, S + 1)
        lo = max(w0, 1)
        if w1 > lo:
            if forced is None:
                draws = np.stack([g.random((w1 - lo, nm + grid.shots)) for g in rngs])
            else:
                # u = 0 selects outcome 1 and u = 1 outcome 0 in measure_and_reset_batch
                fb = forced[:, (lo - 1) * nm:(w1 - 1) * nm].reshape(r, w1 - lo, nm)
                draws = np.concatenate([1.0 - fb, np.zeros((r, w1 - lo, grid.shots))], axis=2)
        for s in range(w0, w1):
            if s == 0:
                ushot = u_first
            else:
                row = draws[:, s - lo, :]
                k = 0
                for kind, payload in segs:
                    if kind == "U":
                        psi = mul(psi, payload)
                    else:
                        psi, b = measure_and_reset_batch(psi, payload, row[:, k], nq)
                        if bits is not None:
                            bits[:, (s - 1) * nm + k] = b
                        k += 1
                ushot = row[:, nm:]
            site_p = mul(np.abs(psi) ** 2, masks)
            est[:, s] = _shots(site_p[:, target - 1], ushot, readout)
            if pops is not None:
                pops[:, s, :] = site_p
    return {
        "count": r,
        "sum": est.sum(axis=0),
        "sumsq": (est**2).sum(axis=0),
        "efficiencies": est.sum(axis=1) * grid.dt,
        "estimates": est if keep else None,
        "populations": pops,
        "bits": list(bits) if bits is not None else None,
    }


def run_collision_ensemble(
    network: ExcitonNetwork,
    config: CollisionConfig,
    grid: SimulationGrid,
    source: int,
    target: int,
    seed: int,
    readout: str = "single_shot",
    tag: int = 0,
    workers: int = 1,
    keep: bool | str = False,
    record_bits: bool = False,
    chunk_size: int = 1000,
):
    """``grid.trajectories`` independent circuit runs, each with fresh reset randomness.

    Run ``xi`` uses ``trajectory_rng(seed, xi, tag)`` and matches
    :func:`run_collision_circuit` on that stream.
    """
    if config.mapping != "physical":
        raise ValueError("the single-ancilla circuit uses the physical mapping")
    fn = partial(
        _collision_chunk, network=network, config=config, grid=grid, source=source, target=target,
        seed=seed, tag=tag, readout=readout, keep=keep, record_bits=record_bits,
    )
    chunks = run_chunks(fn, chunk_bounds(grid.trajectories, chunk_size), workers)
    result = reduce_chunks(grid.times, chunks, source, target, keep=bool(keep))
    if keep == "populations":
        result.populations = np.concatenate([c["populations"] for c in chunks])
    return result


# --- replay -----------------------------------------------------------------------

def replay_recorded(
    network: ExcitonNetwork, config: CollisionConfig, grid: SimulationGrid, source: int, target: int, bits
) -> np.ndarray:
    """Site populations (R, S+1, N) of recorded runs, re-driven by their outcome strings.

    Runs the recording circuit with forced outcomes; the result is bitwise equal
    to what the recording run produced (exact-probability readout).
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int8))
    chunk = _collision_chunk(
        (0, bits.shape[0]), network, config, grid, source, target, 0, 0,
        "exact_probability", "populations", False, forced=bits,
    )
    return chunk["populations"]


def replay_batch(network: ExcitonNetwork, config: CollisionConfig, grid: SimulationGrid, source: int, bits) -> np.ndarray:
    """Site populations (R, S+1, N) of the deterministic replay circuits.

    Only the system register is simulated: the Hamiltonian gates of each
    substep are fused, and a recorded 1 applies Z to the colliding site.
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int8))
    n = network.n_sites
    m = config.trotter_steps
    if bits.shape[1] != n * grid.n_steps * m:
        raise ValueError(f"expected {n * grid.n_steps * m} bits per run, got {bits.shape[1]}")
    ham_ops = [op for op in trotter_gate_sequence(network, config)[: len(trotter_gate_sequence(network, config)) // m]
               if op.kind not in ("RZX", "Reset")]
    u_sub = sequence_unitary(ham_ops, n)
    masks = _site_masks(n, n)
    signs = 1.0 - 2.0 * masks  # Z_j eigenvalues per basis state
    r = bits.shape[0]
    psi = np.zeros((r, 1 << n), dtype=complex)
    psi[:, 1 << (n - source)] = 1.0
    out = np.empty((r, grid.n_steps + 1, n))
    out[:, 0, :] = (np.abs(psi) ** 2) @ masks.T
    for s in range(1, grid.n_steps + 1):
        for sub in range(m):
            psi = psi @ u_sub.T
            base = ((s - 1) * m + sub) * n
            for j in range(n):
                flip = bits[:, base + j] == 1
                if np.any(flip):
                    psi[flip] *= signs[j]
        out[:, s, :] = (np.abs(psi) ** 2) @ masks.T
    return out


def replay_from_bits(network: ExcitonNetwork, config: CollisionConfig, grid: SimulationGrid, source: int, bits, target: int = 1) -> PopulationSeries:
    """Deterministically regenerate the trajectory encoded by one reset-outcome string."""
    pops = replay_batch(network, config, grid, source, np.asarray(bits)[None, :])[0]
    return PopulationSeries(grid.times, pops, source, target)


def replay_circuit(network: ExcitonNetwork, config: CollisionConfig, grid: SimulationGrid, source: int, bits) -> np.ndarray:
    """Gate-by-gate replay on the system register (reference for :func:`replay_batch`)."""
    n = network.n_sites
    nm = n * config.trotter_steps
    bits = np.asarray(bits)
    psi = np.zeros(1 << n, dtype=complex)
    psi[1 << (n - source)] = 1.0
    masks = _site_masks(n, n)
    pops = [masks @ np.abs(psi) ** 2]
    for s in range(grid.n_steps):
        for op in replay_gate_sequence(network, config, bits[s * nm:(s + 1) * nm]):
            psi = apply_unitary(psi, op.matrix(), op.targets, n)
        pops.append(masks @ np.abs(psi) ** 2)
    return np.array(pops)


# --- bit-string dumps -------------------------------------------------------------

def pack_bits(bits) -> str:
    """Hex string of a 0/1 sequence, most significant bit first, zero padded."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def unpack_bits(hexstr: str, n_bits: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8)
    out = np.unpackbits(raw)[:n_bits].astype(np.int8)
    if len(out) != n_bits:
        raise ValueError(f"hex string holds fewer than {n_bits} bits")
    return out


# --- algorithmic-mapping collisions ----------------------------------------------

def algorithmic_collision_step(
    state: np.ndarray, network: ExcitonNetwork, config: CollisionConfig, rng: np.random.Generator
) -> np.ndarray:
    """One block of the algorithmic-mapping collision scheme on a system+ancilla statevector.

    The ancilla (last qubit, |0> on entry) is prepared in |0> or |1> with
    probability 1/2 before each site interaction exp(-i c_j dt |j><j| (x) Z),
    which realises the mixed ancilla state I/2. The interaction is diagonal, so
    the ancilla stays a basis state and is returned to |0> deterministically.
    """
    n = network.n_sites
    reg = build_register(network, "algorithmic")
    nq = reg.n_qubits + 1
    if state.shape != (1 << nq,):
        raise ValueError(f"state must live on {nq} qubits")
    anc = nq - 1
    if np.sum(np.abs(state[1::2]) ** 2) > 1e-12:
        raise ValueError("ancilla must be |0> at the start of a block")
    state = apply_unitary(state, hermitian_expm(reg.hamiltonian, config.dt), list(range(reg.n_qubits)), nq)
    for j in range(n):
        flip = rng.random() < 0.5
        if flip:
            state = apply_unitary(state, X, [anc], nq)
        theta = config.couplings[j] * config.dt
        phases = np.zeros(1 << nq)
        phases[2 * reg.site_index[j]] = theta  # |j>|0>: Z = +1
        phases[2 * reg.site_index[j] + 1] = -theta  # |j>|1>: Z = -1
        state = state * np.exp(-1j * phases)
        if flip:
            state = apply_unitary(state, X, [anc], nq)
    return state


def run_algorithmic_collision(
    network: ExcitonNetwork,
    config: CollisionConfig,
    grid: SimulationGrid,
    source: int,
    target: int,
    rng: np.random.Generator,
    readout: str = "exact_probability",
    xi: int = 0,
) -> TrajectoryRecord:
    """Single run of the algorithmic-mapping scheme (reference for the ensemble engine)."""
    reg = build_register(network, "algorithmic")
    nq = reg.n_qubits + 1
    state = np.zeros(1 << nq, dtype=complex)
    state[2 * reg.site_index[source - 1]] = 1.0
    est = np.empty(grid.n_steps + 1)
    pops = np.empty((grid.n_steps + 1, network.n_sites))
    for s in range(grid.n_steps + 1):
        if s:
            state = algorithmic_collision_step(state, network, config, rng)
        prob = np.abs(state[0::2]) ** 2
        pops[s] = prob[reg.site_index]
        est[s] = _shots(pops[s, target - 1], rng.random(grid.shots), readout)
    return TrajectoryRecord(xi, est, pops, kind="collision_algorithmic")


def _algorithmic_chunk(task, network, config, grid, source, target, seed, tag, readout, keep):
    start, stop = task
    n = network.n_sites
    reg = build_register(network, "algorithmic")
    r = stop - start
    S = grid.n_steps
    rngs = [trajectory_rng(seed, xi, tag) for xi in range(start, stop)]
    u = hermitian_expm(reg.hamiltonian, config.dt)
    theta = np.array(config.couplings) * config.dt
    psi = np.zeros((r, reg.dim), dtype=complex)
    psi[:, reg.site_index[source - 1]] = 1.0
    est = np.empty((r, S + 1))
    pops = np.empty((r, S + 1, n)) if keep == "populations" else None
    u_first = np.stack([g.random(grid.shots) for g in rngs])
    t_idx = reg.site_index[target - 1]
    for w0 in range(0, S + 1, WINDOW):
        w1 = min(w0 + WINDOW, S + 1)
        lo = max(w0, 1)
        if w1 > lo:
            draws = np.stack([g.random((w1 - lo, n + grid.shots)) for g in rngs])
        for s in range(w0, w1):
            if s == 0:
                ushot = u_first
            else:
                row = draws[:, s - lo, :]
                psi = psi @ u.T
                for j in range(n):
                    sign = np.where(row[:, j] < 0.5, -1.0, 1.0)  # ancilla |1> has Z = -1
                    psi[:, reg.site_index[j]] *= np.exp(-1j * theta[j] * sign)
                ushot = row[:, n:]
            prob = np.abs(psi) ** 2
            est[:, s] = _shots(prob[:, t_idx], ushot, readout)
            if pops is not None:
                pops[:, s, :] = prob[:, reg.site_index]
    return {
        "count": r,
        "sum": est.sum(axis=0),
        "sumsq": (est**2).sum(axis=0),
        "efficiencies": est.sum(axis=1) * grid.dt,
        "estimates": est if keep else None,
        "populations": pops,
    }


def run_algorithmic_collision_ensemble(
    network: ExcitonNetwork,
    config: CollisionConfig,
    grid: SimulationGrid,
    source: int,
    target: int,
    seed: int,
    readout: str = "single_shot",
    tag: int = 0,
    workers: int = 1,
    keep: bool | str = False,
    chunk_size: int = 1000,
):
    if config.mapping != "algorithmic":
        raise ValueError("config must use the algorithmic mapping")
    fn = partial(
        _algorithmic_chunk, network=network, config=config, grid=grid, source=source,
        target=target, seed=seed, tag=tag, readout=readout, keep=keep,
    )
    chunks = run_chunks(fn, chunk_bounds(grid.trajectories, chunk_size), workers)
    result = reduce_chunks(grid.times, chunks, source, target, keep=bool(keep))
    if keep == "populations":
        result.populations = np.concatenate([c["populations"] for c in chunks])
    return result


# --- single-qubit channel tomography ------------------------------------------------

TOMOGRAPHY_INPUTS = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / np.sqrt(2),
    np.array([1, 1j], dtype=complex) / np.sqrt(2),
)


def collision_pair_channel(rho: np.ndarray, angle: float) -> np.ndarray:
    """Exact density-matrix action of RZX(angle) on (system, fresh |0> ancilla), then reset."""
    anc = np.array([[1, 0], [0, 0]], dtype=complex)
    full = apply_unitary(np.kron(rho, anc), rzx(angle), [0, 1], 2)
    return trace_out_ancilla(full, 1)


def channel_tomography_1q(coupling: float, dt: float) -> tuple[float, dict]:
    """Reconstruct the (RZX(2 c dt), reset) channel on one qubit by linear inversion.

    Returns the fitted phase-flip probability and a report comparing the
    reconstructed superoperator with (1-p) rho + p Z rho Z, p = sin^2(c dt).
    """
    ins = np.array([np.outer(v, v.conj()).reshape(-1) for v in TOMOGRAPHY_INPUTS]).T
    outs = np.array([
        collision_pair_channel(np.outer(v, v.conj()), 2 * coupling * dt).reshape(-1)
        for v in TOMOGRAPHY_INPUTS
    ]).T
    sup = outs @ np.linalg.inv(ins)
    # the |0><1| coherence is multiplied by 1 - 2p
    p_fit = float((1.0 - sup[1, 1].real) / 2.0)
    p = float(np.sin(coupling * dt) ** 2)
    model = (1 - p) * np.eye(4) + p * np.kron(Z, Z.conj())
    report = {
        "p_expected": p,
        "p_fit": p_fit,
        "max_deviation": float(np.max(np.abs(sup - model))),
        "superoperator": sup,
    }
    return p_fit, report


# --- ensemble-averaged circuit map ----------------------------------------------

def trotter_average_superoperator(network: ExcitonNetwork, config: CollisionConfig) -> np.ndarray:
    """Site-basis superoperator of one block averaged over reset outcomes.

    Each (RZX, reset) pair averages to the phase-flip channel with probability
    sin^2(c_j dt / m), so this is the exact expectation of the circuit ensemble.
    """
    n = network.n_sites
    m = config.trotter_steps
    reg = build_register(network, "physical")
    ops = trotter_gate_sequence(network, config)
    ham_ops = [op for op in ops[: len(ops) // m] if op.kind not in ("RZX", "Reset")]
    u = sequence_unitary(ham_ops, n)[np.ix_(reg.site_index, reg.site_index)]
    step = np.kron(u, u.conj())
    eye = np.eye(n * n)
    for j, p in enumerate(config.flip_probabilities):
        z = np.ones(n)
        z[j] = -1.0
        flip = np.diag(np.kron(z, z)).astype(complex)
        step = ((1 - p) * eye + p * flip) @ step
    return np.linalg.matrix_power(step, m)
