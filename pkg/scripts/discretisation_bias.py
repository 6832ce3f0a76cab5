"""Deterministic time-step bias of the stochastic algorithms' averaged dynamics.

Both algorithms average to a fixed per-step channel: the white-noise step
averaged by Gauss-Hermite quadrature, and the collision block averaged over
reset outcomes. Iterating those channels gives the ensemble mean for an
infinite number of runs, so the difference from the oracle isolates the bias
caused by the finite step, free of sampling noise.

    python3 scripts/discretisation_bias.py --dt 0.01
"""
import argparse

import numpy as np

from enaqt.collision import CollisionConfig, trotter_average_superoperator
from enaqt.lindblad import reference_series
from enaqt.network import benchmark_ring
from enaqt.noise import averaged_step_superoperator
from enaqt.series import SimulationGrid, transport_efficiency


def iterate(sup, n, source, target, steps):
    x = np.zeros(n * n, dtype=complex)
    x[(source - 1) * (n + 1)] = 1.0
    out = [x[(target - 1) * (n + 1)].real]
    for _ in range(steps):
        x = sup @ x
        out.append(x[(target - 1) * (n + 1)].real)
    return np.array(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--horizon", type=float, default=40.0)
    ap.add_argument("--gammas", type=float, nargs="+", default=list(np.logspace(-3, 2, 16)))
    args = ap.parse_args()
    grid = SimulationGrid.from_horizon(args.horizon, args.dt)
    print("   gamma    eta_oracle   noise(exact)   noise(split)   collision")
    for g in args.gammas:
        net = benchmark_ring(g)
        eta_o = transport_efficiency(reference_series(net, 1, 3, grid).target_population, args.dt)
        row = []
        for sup in (
            averaged_step_superoperator(net, args.dt, "exact", 12),
            averaged_step_superoperator(net, args.dt, "split", 12),
            trotter_average_superoperator(net, CollisionConfig.from_network(net, args.dt)),
        ):
            row.append(transport_efficiency(iterate(sup, 4, 1, 3, grid.n_steps), args.dt) - eta_o)
        print(f"  {g:8.3g}  {eta_o:10.4f}   {row[0]:+11.4f}   {row[1]:+11.4f}   {row[2]:+10.4f}")


if __name__ == "__main__":
    main()
