import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from enaqt.network import (
    BENCHMARK_RING_ENERGIES,
    ExcitonNetwork,
    Graph,
    PauliTerm,
    benchmark_ring,
    build_register,
    complete_edges,
    decode_algorithmic,
    encode_algorithmic,
    encode_physical,
    excitation_number,
    laplacian,
    path_edges,
    pauli_sum_matrix,
    qubit_hamiltonian,
    qw_probability,
    register_qubits,
    ring_edges,
    sample_static_disorder,
    site_hamiltonian,
    walk_hamiltonian,
)

seeds = st.integers(0, 2**32 - 1)


@st.composite
def networks(draw, max_sites=5):
    n = draw(st.integers(1, max_sites))
    energies = draw(st.lists(st.floats(-4, 4), min_size=n, max_size=n))
    pairs = [(j, k) for j in range(1, n + 1) for k in range(j + 1, n + 1)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    edges = [(j, k, draw(st.floats(-2, 2))) for j, k in chosen]
    gammas = draw(st.lists(st.floats(0, 3), min_size=n, max_size=n))
    return ExcitonNetwork(energies, edges, gammas)


@st.composite
def graphs(draw):
    n = draw(st.integers(2, 7))
    pairs = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True))
    return Graph(n, tuple(edges), draw(st.floats(0.1, 3)))


# --- ExcitonNetwork validation ------------------------------------------------------

@pytest.mark.parametrize(
    "edges",
    [[(1, 1, 1.0)], [(1, 5, 1.0)], [(1, 2, 1.0), (2, 1, 0.5)], [(0, 2, 1.0)]],
)
def test_network_rejects_bad_edges(edges):
    with pytest.raises(ValueError):
        ExcitonNetwork([0, 0, 0], edges, 0.1)


def test_network_rejects_negative_rates():
    with pytest.raises(ValueError):
        ExcitonNetwork([0, 0], [(1, 2, 1.0)], [-0.1, 0.2])


def test_network_normalises_edges_and_rates():
    net = ExcitonNetwork([0, 1, 2], [(3, 1, 0.5)], 0.2)
    assert net.edges == ((1, 3, 0.5),)
    assert net.gammas == (0.2, 0.2, 0.2)
    assert net.with_gamma(1.0).gammas == (1.0, 1.0, 1.0)


# --- Laplacian and quantum walks ----------------------------------------------------------

def test_laplacian_examples():
    ring = laplacian(Graph(4, ((1, 2), (2, 3), (3, 4), (4, 1))))
    want = 2 * np.eye(4)
    for a, b in [(0, 1), (1, 2), (2, 3), (3, 0)]:
        want[a, b] = want[b, a] = -1
    assert np.array_equal(ring, want)
    assert np.array_equal(laplacian(Graph(2, ((1, 2),))), [[1, -1], [-1, 1]])
    k3 = laplacian(Graph(3, ((1, 2), (1, 3), (2, 3))))
    assert np.array_equal(k3, 3 * np.eye(3) - np.ones((3, 3)))


@settings(max_examples=100, deadline=None)
@given(graphs())
def test_laplacian_zero_row_sums_and_psd(g):
    lap = laplacian(g)
    assert np.allclose(lap.sum(axis=1), 0)
    assert np.allclose(lap, lap.T)
    assert np.linalg.eigvalsh(lap).min() >= -1e-10


def test_qw_probability_examples():
    g = Graph(2, ((1, 2),), 1.0)
    assert qw_probability(g, 1, 1, 0.0) == 1.0
    assert qw_probability(g, 1, 2, 0.0) == 0.0
    for t in np.linspace(0, 5, 11):
        assert abs(qw_probability(g, 1, 2, t) - np.sin(t) ** 2) <= 1e-12
    with pytest.raises(ValueError):
        qw_probability(g, 1, 3, 1.0)


@settings(max_examples=30, deadline=None)
@given(graphs(), seeds)
def test_qw_probabilities_sum_to_one(g, seed):
    rng = np.random.default_rng(seed)
    for t in rng.uniform(0, 10, 20):
        total = sum(qw_probability(g, 1, b, t) for b in range(1, g.n_nodes + 1))
        assert abs(total - 1) <= 1e-10


@pytest.mark.parametrize("n,d,edge_fn", [(5, 2, ring_edges), (4, 3, complete_edges), (6, 2, ring_edges)])
def test_regular_graph_site_hamiltonian_is_walk_hamiltonian(n, d, edge_fn):
    nu = 0.7
    edges = [(j, k) for j, k, _ in edge_fn(n)]
    net = ExcitonNetwork([-nu * d] * n, [(j, k, nu) for j, k in edges])
    assert np.max(np.abs(site_hamiltonian(net) - walk_hamiltonian(Graph(n, tuple(edges), nu)))) <= 1e-14


# --- Hamiltonians -------------------------------------------------------------------

def test_site_hamiltonian_examples():
    h = site_hamiltonian(benchmark_ring())
    assert np.allclose(np.diag(h).real, [0.44, 0.24, -3.22, 0.36])
    for j, k in [(0, 1), (1, 2), (2, 3), (0, 3)]:
        assert h[j, k] == h[k, j] == 1
    assert h[0, 2] == h[1, 3] == 0
    assert np.array_equal(site_hamiltonian(ExcitonNetwork([0, 0], [(1, 2, 1.0)])), [[0, 1], [1, 0]])
    assert np.array_equal(site_hamiltonian(ExcitonNetwork([1, 2, 3])), np.diag([1, 2, 3]))


def test_qubit_hamiltonian_two_site_terms():
    terms = qubit_hamiltonian(ExcitonNetwork([1, 0], [(1, 2, 1.0)]))
    as_dict = {t.factors: t.coefficient for t in terms}
    assert as_dict == {
        ((0, "Z"),): -0.5,
        ((1, "Z"),): -0.0,
        ((0, "X"), (1, "X")): 0.5,
        ((0, "Y"), (1, "Y")): 0.5,
    }


def test_qubit_hamiltonian_benchmark_ring():
    terms = qubit_hamiltonian(benchmark_ring())
    z = [t.coefficient for t in terms if len(t.factors) == 1]
    pair = [t.coefficient for t in terms if len(t.factors) == 2]
    assert np.allclose(z, [-0.22, -0.12, 1.61, -0.18])
    assert len(pair) == 8 and all(c == 0.5 for c in pair)


def test_pauli_term_rejects_repeated_qubit():
    with pytest.raises(ValueError):
        PauliTerm(1.0, ((0, "X"), (0, "Z")))


@settings(max_examples=50, deadline=None)
@given(networks())
def test_single_exciton_restriction(net):
    n = net.n_sites
    h = pauli_sum_matrix(qubit_hamiltonian(net), n)
    idx = [encode_physical(j, n) for j in range(1, n + 1)]
    e0 = -0.5 * sum(net.energies)
    want = site_hamiltonian(net) + e0 * np.eye(n)
    assert np.max(np.abs(h[np.ix_(idx, idx)] - want)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(networks())
def test_qubit_hamiltonian_conserves_excitations(net):
    n = net.n_sites
    h = pauli_sum_matrix(qubit_hamiltonian(net), n)
    num = np.diag(excitation_number(n))
    assert np.max(np.abs(h @ num - num @ h)) <= 1e-12


# --- encodings -------------------------------------------------------------------------

def test_physical_encoding():
    assert encode_physical(1, 4) == 8
    assert encode_physical(4, 4) == 1
    idx = [encode_physical(j, 6) for j in range(1, 7)]
    assert len(set(idx)) == 6 and all(bin(i).count("1") == 1 for i in idx)
    with pytest.raises(ValueError):
        encode_physical(5, 4)


def test_algorithmic_encoding():
    assert [encode_algorithmic(j, 4) for j in range(1, 5)] == [0, 1, 2, 3]
    assert register_qubits(4, "algorithmic") == 2
    assert register_qubits(5, "algorithmic") == 3
    assert encode_algorithmic(5, 5) == 4
    for n in range(1, 12):
        assert all(decode_algorithmic(encode_algorithmic(j, n), n) == j for j in range(1, n + 1))
    with pytest.raises(ValueError):
        decode_algorithmic(5, 5)
    with pytest.raises(ValueError):
        encode_algorithmic(0, 5)


def test_registers_for_both_mappings():
    net = benchmark_ring()
    phys = build_register(net, "physical")
    alg = build_register(net, "algorithmic")
    assert phys.n_qubits == 4 and alg.n_qubits == 2
    assert list(phys.site_index) == [8, 4, 2, 1]
    assert list(alg.site_index) == [0, 1, 2, 3]
    assert np.array_equal(alg.hamiltonian, site_hamiltonian(net))
    assert phys.initial_state(2)[4] == 1


# --- static disorder -----------------------------------------------------------------------

def test_static_disorder():
    assert np.array_equal(sample_static_disorder(4, 0.0, np.random.default_rng(0)), np.zeros(4))
    draws = sample_static_disorder(10**6, 2.0, np.random.default_rng(1))
    assert abs(draws.mean()) <= 5 * 2.0 / np.sqrt(10**6)
    a = sample_static_disorder(4, 2.0, np.random.default_rng(20))
    b = sample_static_disorder(4, 2.0, np.random.default_rng(20))
    assert np.array_equal(a, b)
    assert BENCHMARK_RING_ENERGIES == (0.44, 0.24, -3.22, 0.36)
    with pytest.raises(ValueError):
        sample_static_disorder(3, -1.0, np.random.default_rng(0))


def test_edge_builders():
    assert [e[:2] for e in ring_edges(4)] == [(1, 2), (2, 3), (3, 4), (1, 4)]
    assert ring_edges(2) == path_edges(2)
    assert len(path_edges(5)) == 4
    assert len(complete_edges(5)) == 10
