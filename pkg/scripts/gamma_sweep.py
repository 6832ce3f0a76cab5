"""Transport efficiency against dephasing rate for the oracle and the stochastic algorithms.

    python3 scripts/gamma_sweep.py --trajectories 1000 --points 16 --out runs/sweep
"""
import argparse

import numpy as np

from enaqt.config import GridSpec, ScenarioConfig, SweepSpec
from enaqt.experiments import run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--algorithms", nargs="+", default=["classical_noise", "collision"])
    ap.add_argument("--trajectories", type=int, default=1000)
    ap.add_argument("--points", type=int, default=16)
    ap.add_argument("--min", type=float, default=1e-3)
    ap.add_argument("--max", type=float, default=1e2)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--readout", default="single_shot")
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--out", default="runs/sweep")
    args = ap.parse_args()
    for algo in ["lindblad", *args.algorithms]:
        cfg = ScenarioConfig(
            algorithm=algo,
            grid=GridSpec(dt=args.dt, horizon=40.0, trajectories=args.trajectories),
            sweep=SweepSpec(args.min, args.max, args.points),
            readout=args.readout,
            seed=args.seed,
            out=f"{args.out}/{algo}",
        ).validate()
        res = run_sweep(cfg)
        print(f"\n{algo} -> {res['path']}")
        for g, e, o, se in zip(res["gammas"], res["eta"], res["eta_oracle"], res["stderr"]):
            z = "" if np.isnan(se) else f"  z = {(e - o) / se:+.2f}"
            print(f"  gamma {g:9.3g}  eta {e:.4f}  oracle {o:.4f}{z}")


if __name__ == "__main__":
    main()
