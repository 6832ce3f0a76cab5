"""Exact reference solution of the site-dephasing Lindblad equation.

Integration is fixed-step classical RK4 with ``substeps`` internal steps per
output sample. Because the generator is linear and time independent, each RK4
step is the same matrix polynomial of the Liouvillian; it is assembled once
and reused, which is algebraically identical to stepping ``lindblad_rhs``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import ExcitonNetwork, build_register, site_hamiltonian
from .quantum import NumericalError, density, pauli_operator
from .series import PopulationSeries, SimulationGrid

POSITIVITY_GUARD = 1e-7
STEP_CHECK_TOL = 1e-6


class StepSizeError(NumericalError):
    """The requested sampling step is too coarse for the fixed-step integrator."""


@dataclass(eq=False)
class LindbladProblem:
    hamiltonian: np.ndarray
    jump_ops: list
    rates: np.ndarray
    initial_state: np.ndarray
    site_index: np.ndarray | None = None  # basis index of each site, for readout
    source: int = 1
    target: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=complex)
        self.rates = np.asarray(self.rates, dtype=float)
        self.initial_state = np.asarray(self.initial_state, dtype=complex)
        d = self.hamiltonian.shape[0]
        if len(self.jump_ops) != len(self.rates):
            raise ValueError(f"{len(self.jump_ops)} jump operators but {len(self.rates)} rates")
        if np.any(self.rates < 0):
            raise ValueError("rates must be >= 0")
        for op in self.jump_ops:
            if np.shape(op) != (d, d):
                raise ValueError("jump operator dimension does not match the Hamiltonian")
        if self.initial_state.shape != (d, d):
            raise ValueError("initial state dimension does not match the Hamiltonian")
        if self.site_index is None:
            self.site_index = np.arange(d)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def lindblad_rhs(rho: np.ndarray, problem: LindbladProblem) -> np.ndarray:
    h = problem.hamiltonian
    if rho.shape != h.shape:
        raise ValueError(f"rho has shape {rho.shape}, Hamiltonian {h.shape}")
    out = -1j * (h @ rho - rho @ h)
    for g, op in zip(problem.rates, problem.jump_ops):
        if g == 0.0:
            continue
        lol = op.conj().T @ op
        out += g * (op @ rho @ op.conj().T - 0.5 * (lol @ rho + rho @ lol))
    return out


def liouvillian(problem: LindbladProblem) -> np.ndarray:
    """Superoperator acting on row-major ``rho.reshape(-1)``.

    Uses vec(A rho B) = (A kron B^T) vec(rho).
    """
    h = problem.hamiltonian
    eye = np.eye(problem.dim)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for g, op in zip(problem.rates, problem.jump_ops):
        if g == 0.0:
            continue
        op = np.asarray(op, dtype=complex)
        lol = op.conj().T @ op
        sup += g * (np.kron(op, op.conj()) - 0.5 * np.kron(lol, eye) - 0.5 * np.kron(eye, lol.T))
    return sup


def rk4_step_matrix(sup: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step of d/dt x = sup @ x, written as a matrix."""
    a = h * sup
    eye = np.eye(a.shape[0], dtype=complex)
    a2 = a @ a
    a3 = a2 @ a
    return eye + a + a2 / 2 + a3 / 6 + (a3 @ a) / 24


def default_substeps(problem: LindbladProblem, dt: float) -> int:
    """RK4 steps per sample: 10, raised so that (largest dissipation rate) * h <= 0.02."""
    norms = [np.linalg.norm(op, 2) ** 2 for op in problem.jump_ops]
    stiff = max((g * w for g, w in zip(problem.rates, norms)), default=0.0)
    return max(10, int(np.ceil(dt * stiff / 0.02)))


def sample_propagator(problem: LindbladProblem, dt: float, substeps: int | None = None, check: bool = True) -> np.ndarray:
    """Map advancing vec(rho) by one sampling interval ``dt`` (``substeps`` RK4 steps)."""
    if substeps is None:
        substeps = default_substeps(problem, dt)
    sup = liouvillian(problem)
    prop = np.linalg.matrix_power(rk4_step_matrix(sup, dt / substeps), substeps)
    if check:
        half = np.linalg.matrix_power(rk4_step_matrix(sup, dt / (2 * substeps)), 2 * substeps)
        err = np.max(np.abs(prop - half))
        if not np.isfinite(err) or err > STEP_CHECK_TOL:
            raise StepSizeError(
                f"RK4 step {dt / substeps:g} disagrees with its half step by {err:.2e}; "
                "reduce dt (or raise substeps)"
            )
    return prop


@dataclass
class MasterEquationSolution:
    times: np.ndarray
    diagonals: np.ndarray  # (S+1, dim) basis-state populations
    series: PopulationSeries
    states: np.ndarray | None = None


def integrate_master_equation(
    problem: LindbladProblem,
    grid: SimulationGrid,
    substeps: int | None = None,
    keep_states: bool = False,
    check_step: bool = True,
) -> MasterEquationSolution:
    d = problem.dim
    prop = sample_propagator(problem, grid.dt, substeps, check=check_step)
    x = problem.initial_state.reshape(-1).copy()
    diag_idx = np.arange(d) * (d + 1)
    diags = np.empty((grid.n_steps + 1, d))
    states = np.empty((grid.n_steps + 1, d, d), dtype=complex) if keep_states else None
    for s in range(grid.n_steps + 1):
        if s:
            x = prop @ x
        diags[s] = x[diag_idx].real
        if keep_states:
            states[s] = x.reshape(d, d)
    if diags.min() < -POSITIVITY_GUARD:
        s_bad = int(np.argmin(diags.min(axis=1)))
        raise NumericalError(
            f"population {diags.min():.2e} at t = {grid.times[s_bad]:g} violates positivity"
        )
    trace = x.reshape(d, d).trace().real
    if abs(trace - np.trace(problem.initial_state).real) > 1e-9:
        raise NumericalError(f"trace drifted to {trace}")
    series = PopulationSeries(
        grid.times, diags[:, problem.site_index], problem.source, problem.target
    )
    return MasterEquationSolution(grid.times, diags, series, states)


def site_problem(network: ExcitonNetwork, source: int = 1, target: int = 1) -> LindbladProblem:
    """Site-basis problem: projector jump operators with rates gamma_j."""
    n = network.n_sites
    h = site_hamiltonian(network)
    jumps = []
    for j in range(n):
        p = np.zeros((n, n), dtype=complex)
        p[j, j] = 1.0
        jumps.append(p)
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[source - 1, source - 1] = 1.0
    return LindbladProblem(h, jumps, network.gamma_array, rho0, None, source, target)


def qubit_form_problem(network: ExcitonNetwork, source: int = 1, target: int = 1) -> LindbladProblem:
    """One-qubit-per-site problem: Z_j jump operators with rates gamma_j / 4.

    Z is Hermitian and unitary, so Gamma (Z rho Z - rho) is the standard
    Lindblad dissipator with L = Z and rate Gamma.
    """
    reg = build_register(network, "physical")
    n = network.n_sites
    jumps = [pauli_operator([(j, "Z")], n) for j in range(n)]
    rho0 = density(reg.initial_state(source))
    return LindbladProblem(
        reg.hamiltonian, jumps, network.gamma_array / 4, rho0, reg.site_index, source, target
    )


def reference_series(
    network: ExcitonNetwork, source: int, target: int, grid: SimulationGrid, substeps: int | None = None
) -> PopulationSeries:
    """Oracle populations of every site on ``grid`` (site-basis integration)."""
    return integrate_master_equation(site_problem(network, source, target), grid, substeps).series


__all__ = [
    "LindbladProblem",
    "MasterEquationSolution",
    "StepSizeError",
    "default_substeps",
    "integrate_master_equation",
    "lindblad_rhs",
    "liouvillian",
    "qubit_form_problem",
    "reference_series",
    "site_problem",
]
