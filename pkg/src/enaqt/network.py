"""Exciton network definitions, Hamiltonians and register mappings.

Units: hbar = 1 and the nearest-neighbour coupling V = 1, so energies are in
units of V and times in units of hbar/V. Sites are numbered 1..N as in the
usual chemistry notation; qubit indices (see :mod:`enaqt.quantum`) start at 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .quantum import hermitian_expm, pauli_operator

Mapping = Literal["physical", "algorithmic"]
MAPPINGS = ("physical", "algorithmic")

# four-site disordered ring used throughout the transport experiments
BENCHMARK_RING_ENERGIES = (0.44, 0.24, -3.22, 0.36)


@dataclass(frozen=True)
class ExcitonNetwork:
    energies: tuple[float, ...]
    edges: tuple[tuple[int, int, float], ...] = ()
    gammas: tuple[float, ...] | float = 0.0

    def __post_init__(self):
        energies = tuple(float(e) for e in np.atleast_1d(self.energies))
        n = len(energies)
        if n < 1:
            raise ValueError("a network needs at least one site")
        edges = []
        seen = set()
        for edge in self.edges:
            if len(edge) == 2:
                j, k, v = edge[0], edge[1], 1.0
            else:
                j, k, v = edge
            j, k = int(j), int(k)
            if j == k:
                raise ValueError(f"self-loop on site {j}")
            j, k = min(j, k), max(j, k)
            if j < 1 or k > n:
                raise ValueError(f"edge ({j}, {k}) outside sites 1..{n}")
            if (j, k) in seen:
                raise ValueError(f"duplicate edge ({j}, {k})")
            seen.add((j, k))
            edges.append((j, k, float(v)))
        gammas = np.broadcast_to(np.asarray(self.gammas, dtype=float), (n,))
        if np.any(gammas < 0) or not np.all(np.isfinite(gammas)):
            raise ValueError("dephasing rates must be finite and >= 0")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "gammas", tuple(float(g) for g in gammas))

    @property
    def n_sites(self) -> int:
        return len(self.energies)

    @property
    def gamma_array(self) -> np.ndarray:
        return np.array(self.gammas)

    def with_gamma(self, gamma) -> "ExcitonNetwork":
        return replace(self, gammas=gamma)

    def with_energies(self, energies) -> "ExcitonNetwork":
        return replace(self, energies=tuple(energies))


def ring_edges(n: int, coupling: float = 1.0) -> list[tuple[int, int, float]]:
    if n < 3:
        return path_edges(n, coupling)
    return [(j, j + 1, coupling) for j in range(1, n)] + [(1, n, coupling)]


def path_edges(n: int, coupling: float = 1.0) -> list[tuple[int, int, float]]:
    return [(j, j + 1, coupling) for j in range(1, n)]


def complete_edges(n: int, coupling: float = 1.0) -> list[tuple[int, int, float]]:
    return [(j, k, coupling) for j in range(1, n + 1) for k in range(j + 1, n + 1)]


TOPOLOGIES = {"ring": ring_edges, "path": path_edges, "complete": complete_edges}


def benchmark_ring(gamma: float = 0.1) -> ExcitonNetwork:
    """The disordered four-site ring (sigma/V = 2 realisation) with uniform dephasing."""
    return ExcitonNetwork(BENCHMARK_RING_ENERGIES, ring_edges(4), gamma)


def sample_static_disorder(n: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Site energies drawn independently from Normal(0, sigma**2)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return sigma * rng.standard_normal(n)


# --- graphs and quantum walks ----------------------------------------------

@dataclass(frozen=True)
class Graph:
    n_nodes: int
    edges: tuple[tuple[int, int], ...] = field(default=())
    hop_rate: float = 1.0

    def __post_init__(self):
        edges = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b or not (1 <= a <= self.n_nodes and 1 <= b <= self.n_nodes):
                raise ValueError(f"invalid edge ({a}, {b})")
            edges.add((min(a, b), max(a, b)))
        if self.hop_rate <= 0:
            raise ValueError("hop rate must be positive")
        object.__setattr__(self, "edges", tuple(sorted(edges)))

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n_nodes, dtype=int)
        for a, b in self.edges:
            d[a - 1] += 1
            d[b - 1] += 1
        return d


def laplacian(graph: Graph) -> np.ndarray:
    lap = np.diag(graph.degrees().astype(float))
    for a, b in graph.edges:
        lap[a - 1, b - 1] -= 1.0
        lap[b - 1, a - 1] -= 1.0
    return lap


def walk_hamiltonian(graph: Graph) -> np.ndarray:
    return -graph.hop_rate * laplacian(graph)


def qw_probability(graph: Graph, a: int, b: int, t: float) -> float:
    """Probability of hopping from node ``a`` to node ``b`` in time ``t``."""
    for node in (a, b):
        if not 1 <= node <= graph.n_nodes:
            raise ValueError(f"node {node} outside 1..{graph.n_nodes}")
    u = hermitian_expm(walk_hamiltonian(graph).astype(complex), t)
    return float(abs(u[b - 1, a - 1]) ** 2)


# --- Hamiltonians -------------------------------------------------------------

def site_hamiltonian(network: ExcitonNetwork) -> np.ndarray:
    h = np.diag(np.array(network.energies, dtype=complex))
    for j, k, v in network.edges:
        h[j - 1, k - 1] += v
        h[k - 1, j - 1] += v
    return h


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        qubits = [q for q, _ in self.factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in Pauli term {self.factors}")
        if any(p not in "XYZ" for _, p in self.factors):
            raise ValueError(f"unknown Pauli label in {self.factors}")


def qubit_hamiltonian(network: ExcitonNetwork) -> list[PauliTerm]:
    """Pauli-sum form of the exciton Hamiltonian, one qubit per site.

    Zero-coefficient terms are kept so that term counts reflect the network.
    """
    terms = [PauliTerm(-e / 2, ((j, "Z"),)) for j, e in enumerate(network.energies)]
    for j, k, v in network.edges:
        terms.append(PauliTerm(v / 2, ((j - 1, "X"), (k - 1, "X"))))
        terms.append(PauliTerm(v / 2, ((j - 1, "Y"), (k - 1, "Y"))))
    return terms


def pauli_sum_matrix(terms, n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    h = np.zeros((dim, dim), dtype=complex)
    for term in terms:
        if term.coefficient != 0.0:
            h += term.coefficient * pauli_operator(term.factors, n_qubits)
    return h


def excitation_number(n_qubits: int) -> np.ndarray:
    """Diagonal of sum_j (I - Z_j)/2, i.e. the Hamming weight of each index."""
    idx = np.arange(1 << n_qubits)
    return np.array([bin(i).count("1") for i in idx], dtype=float)


# --- encodings ----------------------------------------------------------------

def _check_site(j: int, n: int):
    if not 1 <= j <= n:
        raise ValueError(f"site {j} outside 1..{n}")


def encode_physical(j: int, n: int) -> int:
    _check_site(j, n)
    return 1 << (n - j)


def encode_algorithmic(j: int, n: int) -> int:
    _check_site(j, n)
    return j - 1


def decode_algorithmic(index: int, n: int) -> int:
    if not 0 <= index < n:
        raise ValueError(f"basis index {index} does not encode a site of a {n}-site network")
    return index + 1


def algorithmic_qubits(n: int) -> int:
    """ceil(log2 n) without floating point."""
    return (n - 1).bit_length()


def register_qubits(n_sites: int, mapping: str) -> int:
    if mapping == "physical":
        return n_sites
    if mapping == "algorithmic":
        return algorithmic_qubits(n_sites)
    raise ValueError(f"unknown mapping {mapping!r}")


@dataclass(frozen=True, eq=False)
class Register:
    """A network laid out on a qubit register under one of the two mappings."""

    mapping: str
    n_sites: int
    n_qubits: int
    hamiltonian: np.ndarray
    site_index: np.ndarray  # basis index of |j>, j = 1..N
    site_projectors: np.ndarray  # (N, dim) diagonals of the site-occupation operators

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def initial_state(self, j0: int) -> np.ndarray:
        _check_site(j0, self.n_sites)
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.site_index[j0 - 1]] = 1.0
        return psi


def build_register(network: ExcitonNetwork, mapping: str = "algorithmic") -> Register:
    n = network.n_sites
    nq = register_qubits(n, mapping)
    dim = 1 << nq
    if mapping == "physical":
        h = pauli_sum_matrix(qubit_hamiltonian(network), nq)
        idx = np.array([encode_physical(j, n) for j in range(1, n + 1)])
        basis = np.arange(dim)
        # occupation number n_j = (I - Z_j)/2 is the bit of qubit j-1
        proj = np.array([((basis >> (n - j)) & 1) for j in range(1, n + 1)], dtype=float)
    else:
        h = np.zeros((dim, dim), dtype=complex)
        h[:n, :n] = site_hamiltonian(network)
        idx = np.array([encode_algorithmic(j, n) for j in range(1, n + 1)])
        proj = np.zeros((n, dim))
        proj[np.arange(n), idx] = 1.0
    return Register(mapping, n, nq, h, idx, proj)
