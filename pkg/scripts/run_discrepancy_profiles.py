#!/usr/bin/env python3
"""Prefix-discrepancy profiles of the classical baselines.

Writes one CSV of full curves (P, one column per sequence) per kernel and
prints the values at selected prefix lengths, including the mean over
scrambled-Sobol' seeds.
"""

import argparse
from pathlib import Path

import numpy as np

from lowdisc import discrepancy as disc
from lowdisc import seqcore as sq

SELECTED = (100, 500, 1000, 2000, 5000, 10000)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--burn-in", type=int, default=128, dest="burn_in")
    ap.add_argument("--kernels", default="sym,star,ctr")
    ap.add_argument("--scrambles", type=int, default=32, help="scrambled-Sobol' seeds to average")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="profiles", dest="out_dir")
    args = ap.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kernels = args.kernels.split(",")

    sequences = {
        "sobol": sq.generate(sq.SequenceSpec("sobol", args.dim, burn_in=args.burn_in), args.n),
        "halton": sq.generate(sq.SequenceSpec("halton", args.dim, burn_in=args.burn_in), args.n),
    }
    scrambled = [
        sq.generate(
            sq.SequenceSpec(
                "sobol-scrambled",
                args.dim,
                burn_in=args.burn_in,
                seed=sq.split_seed(args.seed, "profile-scramble", rep),
            ),
            args.n,
        )
        for rep in range(args.scrambles)
    ]

    for family in kernels:
        spec = disc.KernelSpec(family)
        curves = {name: disc.discrepancy_all_prefixes(spec, pts) for name, pts in sequences.items()}
        curves["scrambled-sobol-mean"] = np.mean(
            [disc.discrepancy_all_prefixes(spec, pts) for pts in scrambled], axis=0
        )
        path = out_dir / f"profile_{family}_d{args.dim}.csv"
        names = list(curves)
        with open(path, "w") as fh:
            fh.write("P," + ",".join(names) + "\n")
            for p in range(args.n):
                fh.write(f"{p + 1}," + ",".join(f"{curves[n][p]:.17g}" for n in names) + "\n")
        print(f"\n{family} discrepancy, d={args.dim}, burn-in {args.burn_in} -> {path}")
        header = "      N " + "".join(f"{n:>22}" for n in names)
        print(header)
        for sel in SELECTED:
            if sel <= args.n:
                row = f"{sel:>7} " + "".join(f"{curves[n][sel - 1]:>22.6f}" for n in names)
                print(row)


if __name__ == "__main__":
    main()
