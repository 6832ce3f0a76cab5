"""Target-site dynamics on the benchmark ring: both stochastic algorithms against the oracle.

    python3 scripts/reproduce_dynamics.py --trajectories 8000 --out runs/dynamics
"""
import argparse

import numpy as np

from enaqt.config import GridSpec, ScenarioConfig
from enaqt.experiments import run_dynamics


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trajectories", type=int, default=8000)
    ap.add_argument("--gamma", type=float, default=0.1)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--horizon", type=float, default=40.0)
    ap.add_argument("--readout", default="single_shot")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default="runs/dynamics")
    args = ap.parse_args()
    for algo in ("classical_noise", "collision"):
        cfg = ScenarioConfig(
            algorithm=algo,
            grid=GridSpec(dt=args.dt, horizon=args.horizon, trajectories=args.trajectories),
            readout=args.readout,
            seed=args.seed,
            out=f"{args.out}/{algo}",
        )
        cfg.network.gamma = args.gamma
        res = run_dynamics(cfg.validate())
        dev = np.max(np.abs(res["run"].mean - res["oracle"]))
        print(f"{algo:16s} eta {res['eta']:.4f} +/- {res['eta_stderr']:.4f} (oracle {res['eta_oracle']:.4f}), "
              f"max |p - p_oracle| {dev:.4f} -> {res['path']}")


if __name__ == "__main__":
    main()
