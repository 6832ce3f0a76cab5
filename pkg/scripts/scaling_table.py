"""Qubit and per-block gate counts against network size, with polynomial fits.

    python3 scripts/scaling_table.py --sizes 4 5 6 7 8 9 10 11 12
"""
import argparse

from enaqt.experiments import fit_r2, scaling_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=list(range(4, 13)))
    args = ap.parse_args()
    algos = ["classical_noise", "collision"]
    for mapping in ("physical", "algorithmic"):
        for topo, degree in (("ring", 1), ("complete", 2)):
            rows = scaling_rows(args.sizes, topo, mapping, algos)
            print(f"\n{mapping} mapping, {topo} ({rows[0]['kind']})")
            print("   N  algorithm         qubits  gates  resets")
            for r in rows:
                print(f"  {r['N']:2d}  {r['algorithm']:16s}  {r['qubits']:6d}  {r['gates']:5d}  {r['resets']:6d}")
            if mapping == "physical" and len(args.sizes) > degree + 1:
                for a in algos:
                    sel = [r for r in rows if r["algorithm"] == a]
                    r2 = fit_r2([r["N"] for r in sel], [r["gates"] for r in sel], degree)
                    print(f"  degree-{degree} fit of {a} gate count: R^2 = {r2:.6f}")


if __name__ == "__main__":
    main()
