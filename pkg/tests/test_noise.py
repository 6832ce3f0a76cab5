import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from enaqt.lindblad import liouvillian, reference_series, site_problem
from enaqt.network import ExcitonNetwork, benchmark_ring, build_register, site_hamiltonian
from enaqt.noise import (
    NoiseConfig,
    _ou_path,
    averaged_step_superoperator,
    noise_averaged_step,
    ou_step,
    run_noise_ensemble,
    run_noise_trajectory,
    sample_white_noise,
    split_gate_sequence,
    step_propagator,
)
from enaqt.collision import sequence_unitary
from enaqt.quantum import hermitian_expm
from enaqt.series import SimulationGrid, TrajectoryRecord, ensemble_average
from enaqt.streams import trajectory_streams

RING = benchmark_ring(0.1)


# --- noise generators ------------------------------------------------------------------

def test_white_noise_zero_amplitude():
    assert np.array_equal(sample_white_noise(NoiseConfig("white", (0.0,) * 4), np.random.default_rng(0)), np.zeros(4))


def test_white_noise_variance():
    draws = sample_white_noise(NoiseConfig("white", (1.0,)), np.random.default_rng(1), n=10**6)
    assert 0.994 <= draws.var() <= 1.006


def test_white_noise_config_matches_rates():
    cfg = NoiseConfig.white(ExcitonNetwork([0, 0], [(1, 2, 1.0)], [0.3, 0.7]))
    assert cfg.amplitudes == (0.3, 0.7)
    with pytest.raises(ValueError):
        NoiseConfig("pink", (1.0,))
    with pytest.raises(ValueError):
        NoiseConfig("white", (-1.0,))


def test_trajectory_streams_are_independent():
    a, _ = trajectory_streams(5, 0)
    b, _ = trajectory_streams(5, 1)
    n = 10**5
    corr = np.corrcoef(a.standard_normal(n), b.standard_normal(n))[0, 1]
    assert abs(corr) <= 5 / np.sqrt(n)
    noise, readout = trajectory_streams(5, 0)
    assert abs(np.corrcoef(noise.random(n), readout.random(n))[0, 1]) <= 5 / np.sqrt(n)


def test_ou_frozen_when_rate_is_zero():
    cfg = NoiseConfig("ornstein_uhlenbeck", (2.0, 0.5), 0.0)
    rng = np.random.default_rng(2)
    start = sample_white_noise(cfg, rng)
    x = start
    for _ in range(10):
        x = ou_step(x, cfg, 0.1, rng)
    assert np.array_equal(x, start)


def test_ou_uncorrelated_for_fast_relaxation():
    cfg = NoiseConfig("ornstein_uhlenbeck", (2.0,), 1e4)
    path = _ou_path(np.random.default_rng(3).standard_normal((10**5, 1)), cfg, 0.1)[:, 0]
    assert abs(np.corrcoef(path[:-1], path[1:])[0, 1]) <= 5 / np.sqrt(10**5)
    assert abs(path.var() - 2.0) <= 5 * 2.0 * np.sqrt(2 / 10**5)


def test_ou_autocorrelation():
    lam, dt, n = 1.0, 0.1, 10**6
    cfg = NoiseConfig("ornstein_uhlenbeck", (1.0,), lam)
    path = _ou_path(np.random.default_rng(4).standard_normal((n, 1)), cfg, dt)[:, 0]
    # a lag-k estimate of an AR(1) series has standard error ~ sqrt((1 + r^2)/(1 - r^2) / n)
    r = np.exp(-lam * dt)
    se = np.sqrt((1 + r**2) / (1 - r**2) / n)
    for k in range(1, 21):
        est = np.mean(path[:-k] * path[k:]) / np.mean(path**2)
        assert abs(est - np.exp(-lam * k * dt)) <= 5 * se * np.sqrt(1 + 2 * k * r**k)


def test_ou_step_matches_path_generator():
    cfg = NoiseConfig("ornstein_uhlenbeck", (1.5, 0.2), 0.7)
    draws = np.random.default_rng(5).standard_normal((6, 2))
    path = _ou_path(draws, cfg, 0.3)
    rng = np.random.default_rng(5)
    x = cfg.std * rng.standard_normal(2)
    seq = [x]
    for _ in range(5):
        x = ou_step(x, cfg, 0.3, rng)
        seq.append(x)
    assert np.allclose(np.array(seq), path, atol=1e-14)


# --- step propagator ----------------------------------------------------------------------

def test_step_propagator_without_noise():
    h = site_hamiltonian(RING)
    want = hermitian_expm(h, 0.01)
    for mode in ("exact", "split"):
        assert np.allclose(step_propagator(h, np.zeros(4), 0.01, mode), want, atol=1e-14)


def test_step_propagator_diagonal_case():
    eps = np.array([0.3, -1.2, 2.0])
    u = step_propagator(np.zeros((3, 3)), eps, 0.04, "exact")
    assert np.allclose(u, np.diag(np.exp(-1j * eps * 0.2)), atol=1e-14)


def test_step_propagator_rejects_bad_input():
    with pytest.raises(ValueError):
        step_propagator(np.eye(2), [np.nan, 0.0], 0.1)
    with pytest.raises(ValueError):
        step_propagator(np.eye(2), [0.0, 0.0], 0.1, mode="magic")


def test_split_error_scales_as_three_halves():
    h = site_hamiltonian(RING)
    eps = np.array([0.8, -1.1, 0.5, 1.7])
    errs = [np.linalg.norm(step_propagator(h, eps, dt, "exact") - step_propagator(h, eps, dt, "split"), 2) for dt in (1e-2, 1e-3)]
    assert errs[0] / errs[1] >= 20


def test_split_gate_sequence_reproduces_split_step():
    net = ExcitonNetwork([0.3, -0.4], [(1, 2, 1.0)], 0.2)
    phases = np.array([0.05, -0.02])
    dt = 0.01
    u_gates = sequence_unitary(split_gate_sequence(net, dt, phases), 2)
    reg = build_register(net, "physical")
    eps = phases / np.sqrt(dt)
    u_split = step_propagator(reg.hamiltonian, eps, dt, "split", reg.site_projectors)
    # one edge: the RXX/RYY pair commutes with the RZ layer only up to O(dt^2)
    overlap = u_gates.conj().T @ u_split
    sub = overlap[np.ix_(reg.site_index, reg.site_index)]
    phase = sub[0, 0] / abs(sub[0, 0])
    assert np.max(np.abs(sub / phase - np.eye(2))) <= 5e-4


# --- trajectories ----------------------------------------------------------------------------

def test_noiseless_trajectory_is_isolated_dynamics():
    net = RING.with_gamma(0.0)
    grid = SimulationGrid.from_horizon(40, 0.01)
    rec = run_noise_trajectory(net, grid, 1, 3, np.random.default_rng(0))
    u = hermitian_expm(site_hamiltonian(net), 0.01)
    psi = np.eye(4, dtype=complex)[0]
    want = []
    for s in range(grid.n_steps + 1):
        if s:
            psi = u @ psi
        want.append(abs(psi[2]) ** 2)
    assert np.max(np.abs(rec.estimates - want)) <= 1e-8


def test_trajectory_is_deterministic_given_stream():
    grid = SimulationGrid.from_horizon(2, 0.01, shots=3)
    a = run_noise_trajectory(RING, grid, 1, 3, np.random.default_rng(8), readout="single_shot")
    b = run_noise_trajectory(RING, grid, 1, 3, np.random.default_rng(8), readout="single_shot")
    assert np.array_equal(a.estimates, b.estimates)
    assert set(np.unique(a.estimates)) <= {0, 1 / 3, 2 / 3, 1}


def test_single_site_network_stays_put():
    net = ExcitonNetwork([0.5], [], 2.0)
    rec = run_noise_trajectory(net, SimulationGrid(0.01, 100), 1, 1, np.random.default_rng(0))
    assert np.allclose(rec.estimates, 1.0)


@pytest.mark.parametrize("kind", ["white", "ornstein_uhlenbeck"])
@pytest.mark.parametrize("readout", ["exact_probability", "single_shot"])
def test_batched_engine_matches_single_trajectories(kind, readout):
    grid = SimulationGrid.from_horizon(3, 0.01, trajectories=7, shots=2)
    noise = NoiseConfig(kind, (0.5, 1.0, 2.0, 0.1), 3.0 if kind != "white" else 0.0)
    ens = run_noise_ensemble(RING, grid, 1, 3, 21, noise, readout, tag=4, keep=True, chunk_size=3)
    for xi in range(grid.trajectories):
        noise_rng, read_rng = trajectory_streams(21, xi, 4)
        rec = run_noise_trajectory(RING, grid, 1, 3, noise_rng, noise, readout, readout_rng=read_rng)
        assert np.max(np.abs(rec.estimates - ens.estimates[xi])) <= 1e-10


def test_mappings_give_identical_trajectories():
    grid = SimulationGrid.from_horizon(5, 0.01)
    recs = [
        run_noise_trajectory(RING, grid, 2, 4, np.random.default_rng(3), mapping=m).populations
        for m in ("algorithmic", "physical")
    ]
    assert np.max(np.abs(recs[0] - recs[1])) <= 1e-10


def test_norm_conserved_over_long_run():
    # run_noise_trajectory raises on a norm drift above 1e-9
    rec = run_noise_trajectory(RING.with_gamma(2.0), SimulationGrid(0.01, 4000), 1, 3, np.random.default_rng(1))
    assert np.allclose(rec.populations.sum(axis=1), 1, atol=1e-9)


def test_worker_count_does_not_change_results():
    grid = SimulationGrid.from_horizon(1, 0.01, trajectories=40)
    a = run_noise_ensemble(RING, grid, 1, 3, 2, chunk_size=10, workers=1)
    b = run_noise_ensemble(RING, grid, 1, 3, 2, chunk_size=10, workers=2)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr, b.stderr)


# --- ensemble averaging -------------------------------------------------------------------

def test_ensemble_of_identical_records():
    rec = TrajectoryRecord(0, np.array([0.0, 0.2, 0.5]))
    res = ensemble_average([rec] * 5, 0.1)
    assert np.allclose(res.mean, rec.estimates)
    assert np.allclose(res.stderr, 0)
    with pytest.raises(ValueError):
        ensemble_average([], 0.1)
    with pytest.raises(ValueError):
        ensemble_average([rec, TrajectoryRecord(1, np.zeros(4))], 0.1)
    with pytest.raises(ValueError):
        TrajectoryRecord(0, np.array([1.5]))


def test_exact_readout_swarm_tracks_oracle():
    grid = SimulationGrid.from_horizon(40, 0.01, trajectories=200)
    ens = run_noise_ensemble(RING, grid, 1, 3, 31, readout="exact_probability")
    oracle = reference_series(RING, 1, 3, SimulationGrid.from_horizon(40, 0.01)).target_population
    dev = np.abs(ens.mean - oracle)
    # early samples have a vanishing band; judge against the band where it is resolved
    band = np.maximum(ens.stderr, 1e-3)
    assert np.max(dev / band) <= 5


def test_single_trajectories_do_not_equilibrate():
    grid = SimulationGrid.from_horizon(40, 0.01, trajectories=50)
    ens = run_noise_ensemble(RING, grid, 1, 3, 32, readout="exact_probability", keep=True)
    window = grid.times >= 20
    per_traj = np.var(ens.estimates[:, window], axis=1).mean()
    averaged = np.var(ens.mean[window])
    assert per_traj > 10 * averaged


def test_fast_ou_matches_white_noise():
    dt = 0.01
    grid = SimulationGrid.from_horizon(10, dt, trajectories=1000)
    white = run_noise_ensemble(RING, grid, 1, 3, 40, readout="exact_probability")
    ou_cfg = NoiseConfig("ornstein_uhlenbeck", tuple(RING.gamma_array / dt), 1000.0)
    ou = run_noise_ensemble(RING, grid, 1, 3, 41, ou_cfg, readout="exact_probability")
    band = 5 * np.sqrt(white.stderr**2 + ou.stderr**2) + 1e-3
    assert np.all(np.abs(white.mean - ou.mean) <= band)


# --- one-step consistency with the master equation ------------------------------------------

def test_quadrature_average_matches_monte_carlo():
    dt = 0.05
    net = RING.with_gamma(1.0)
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    quad = (averaged_step_superoperator(net, dt, "exact", 12) @ rho.reshape(-1)).reshape(4, 4)
    mc = noise_averaged_step(rho, net, dt, 200_000, np.random.default_rng(1))
    assert np.max(np.abs(quad - mc)) <= 2e-3


def test_split_average_is_dephasing_then_hamiltonian_step():
    dt = 0.02
    net = RING.with_gamma(np.array([0.5, 1.0, 2.0, 0.1]))
    sup = averaged_step_superoperator(net, dt, "split", 20)
    u = hermitian_expm(site_hamiltonian(net), dt)
    g = net.gamma_array
    deph = np.exp(-(g[:, None] + g[None, :]) * dt / 2)
    np.fill_diagonal(deph, 1.0)
    want = np.kron(u, u.conj()) @ np.diag(deph.reshape(-1))
    assert np.max(np.abs(sup - want)) <= 1e-12


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 3.0))
def test_averaged_step_is_first_order_lindblad(gamma):
    net = RING.with_gamma(gamma)
    lv = liouvillian(site_problem(net))
    errs = []
    for dt in (2e-3, 1e-3):
        sup = averaged_step_superoperator(net, dt, "exact", 10)
        errs.append(np.max(np.abs(sup - (np.eye(16) + dt * lv))))
    assert errs[1] <= 0.3 * errs[0] + 1e-12
