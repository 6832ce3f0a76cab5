"""Command line: ``enaqt <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import SEED_MAX, ConfigError, ScenarioConfig, SweepSpec, load_config
from .quantum import NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--algorithm", help="lindblad | classical_noise | collision | collision_algorithmic | collision_exact")
    common.add_argument("--mapping", help="physical | algorithmic")
    common.add_argument("--readout", help="single_shot | exact_probability")
    common.add_argument("--dt", type=float, help="time step (units of hbar/V)")
    common.add_argument("--horizon", type=float, help="final time T")
    common.add_argument("--trajectories", type=int, help="trajectories / circuit runs")
    common.add_argument("--gamma", type=float, help="uniform dephasing rate gamma/V")
    common.add_argument("--coupling", type=float, help="uniform hopping V of a topology network")
    common.add_argument("--source", type=int, help="initial site j0")
    common.add_argument("--target", type=int, help="target site j")
    common.add_argument("--workers", type=int, help="worker processes")

    p = argparse.ArgumentParser(prog="enaqt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("dynamics", parents=[common], help="target population vs time with oracle overlay")
    sw = sub.add_parser("sweep", parents=[common], help="efficiency over a log-spaced gamma/V grid")
    sw.add_argument("--sweep-min", type=float)
    sw.add_argument("--sweep-max", type=float)
    sw.add_argument("--sweep-points", type=int)
    tr = sub.add_parser("trajectories", parents=[common], help="per-trajectory swarm and optional bit dumps")
    tr.add_argument("--record-bits", action="store_true", help="dump collision reset outcomes")
    rp = sub.add_parser("replay", help="regenerate trajectories from a bit dump")
    rp.add_argument("--bits", required=True, help="bits.txt written by 'trajectories --record-bits'")
    rp.add_argument("--xi", type=int, help="replay only this run")
    rp.add_argument("--out", default="out", help="output directory")
    cv = sub.add_parser("converge", parents=[common], help="time-step halving study")
    cv.add_argument("--halvings", type=int)
    sc = sub.add_parser("scaling", parents=[common], help="qubit and gate counts vs network size")
    sc.add_argument("--sizes", type=int, nargs="+", help="site counts N")
    sc.add_argument("--topology", help="ring | path | complete")
    return p


def config_from_args(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    simple = {
        "seed": "seed", "out": "out", "algorithm": "algorithm", "mapping": "mapping",
        "readout": "readout", "source": "source", "target": "target", "workers": "workers",
    }
    for arg, attr in simple.items():
        v = getattr(args, arg, None)
        if v is not None:
            setattr(cfg, attr, v)
    if args.dt is not None:
        cfg.grid.dt = args.dt
    if args.horizon is not None:
        cfg.grid.horizon = args.horizon
    if args.trajectories is not None:
        cfg.grid.trajectories = args.trajectories
    if args.gamma is not None:
        cfg.network.gamma = args.gamma
        cfg.network.gammas = None
    if args.coupling is not None:
        cfg.network.coupling = args.coupling
    if args.command == "sweep":
        if cfg.sweep is None:
            cfg.sweep = SweepSpec()
        for name in ("min", "max", "points"):
            v = getattr(args, f"sweep_{name}")
            if v is not None:
                setattr(cfg.sweep, name, v)
    if args.command == "trajectories" and args.record_bits:
        cfg.record_bits = True
    if args.command == "converge" and args.halvings is not None:
        cfg.halvings = args.halvings
    if args.command == "scaling":
        if args.sizes:
            cfg.scaling_sizes = list(args.sizes)
        if args.topology:
            cfg.scaling_topology = args.topology
    return cfg.validate()


def main(argv=None) -> int:
    from . import experiments

    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            res = experiments.replay(args.bits, args.out, args.xi)
            print(f"replayed {len(res['xis'])} run(s) -> {res['path']}")
            return EXIT_OK
        cfg = config_from_args(args)
        if args.command == "dynamics":
            res = experiments.run_dynamics(cfg)
            err = "" if res["eta_stderr"] is None else f" +/- {res['eta_stderr']:.4f}"
            print(f"eta = {res['eta']:.4f}{err} (oracle {res['eta_oracle']:.4f}) -> {res['path']}")
        elif args.command == "sweep":
            res = experiments.run_sweep(cfg)
            print(f"{len(res['gammas'])} sweep points -> {res['path']}")
        elif args.command == "trajectories":
            res = experiments.run_trajectories(cfg)
            print("wrote " + ", ".join(str(p) for p in res["outputs"]))
        elif args.command == "converge":
            res = experiments.convergence_report(cfg)
            print(json.dumps({"dts": res["dts"], "changes": res["changes"], "order": res["order"]}))
        elif args.command == "scaling":
            res = experiments.scaling_report(cfg)
            print(f"{len(res['rows'])} rows -> {res['path']}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
