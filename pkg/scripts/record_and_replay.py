"""Record collision-circuit reset outcomes, replay them, and check the swarm is reproduced.

    python3 scripts/record_and_replay.py --trajectories 100 --gamma 1.0 --out runs/replay
"""
import argparse
from pathlib import Path

from enaqt.config import GridSpec, ScenarioConfig
from enaqt.experiments import replay, run_trajectories


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trajectories", type=int, default=100)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--horizon", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--out", default="runs/replay")
    args = ap.parse_args()
    cfg = ScenarioConfig(
        algorithm="collision",
        grid=GridSpec(dt=0.01, horizon=args.horizon, trajectories=args.trajectories),
        readout="exact_probability",
        record_bits=True,
        seed=args.seed,
        out=f"{args.out}/record",
    )
    cfg.network.gamma = args.gamma
    rec = run_trajectories(cfg.validate())
    rep = replay(Path(cfg.out) / "bits.txt", f"{args.out}/replay")
    swarm = [",".join(ln.split(",")[:4]) for ln in rec["swarm"].read_text().splitlines()]
    same = rep["path"].read_text().splitlines() == swarm
    print(f"recorded {args.trajectories} runs -> {cfg.out}/bits.txt")
    print(f"replay {'reproduces' if same else 'DIFFERS FROM'} the recorded swarm byte for byte -> {rep['path']}")


if __name__ == "__main__":
    main()
