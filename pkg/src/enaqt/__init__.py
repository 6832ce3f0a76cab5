"""Environment-assisted quantum transport on qubit registers.

Exact Lindblad references, classical-noise unravellings and collision-model
circuits for site-dephasing exciton networks.
"""
from .collision import (
    CollisionConfig,
    GateOp,
    channel_tomography_1q,
    exact_collision_map,
    iterate_collision_map,
    replay_from_bits,
    run_collision_circuit,
    run_collision_ensemble,
    trotter_gate_sequence,
)
from .lindblad import (
    LindbladProblem,
    StepSizeError,
    integrate_master_equation,
    qubit_form_problem,
    reference_series,
    site_problem,
)
from .network import ExcitonNetwork, build_register, benchmark_ring, qubit_hamiltonian, site_hamiltonian
from .noise import NoiseConfig, run_noise_ensemble, run_noise_trajectory
from .quantum import NumericalError
from .series import EnsembleResult, PopulationSeries, SimulationGrid, TrajectoryRecord, transport_efficiency

__version__ = "0.1.0"
