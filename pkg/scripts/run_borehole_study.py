#!/usr/bin/env python3
"""Borehole benchmark: sensitivity indices, the derived coordinate weights,
and a QMC integration error table against an in-run Monte Carlo reference.
"""

import argparse

from lowdisc import bench
from lowdisc import seqcore as sq


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--base-n", type=int, default=2**13, dest="base_n")
    ap.add_argument("--gamma-floor", type=float, default=0.001, dest="gamma_floor")
    ap.add_argument("--n", type=int, default=500, help="points per sequence in the error table")
    ap.add_argument("--mc-reference-n", type=int, default=2**21, dest="mc_reference_n")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--model", help="optional neural model file to include")
    ap.add_argument("--sens-out", default="borehole_sensitivity.csv", dest="sens_out")
    ap.add_argument("--errors-out", default="borehole_errors.csv", dest="errors_out")
    args = ap.parse_args()

    result = bench.sensitivity(
        bench.borehole, dim=8, base_n=args.base_n, seed=sq.split_seed(args.seed, "sens")
    )
    gamma = bench.weights_from_sensitivity(result, args.gamma_floor)
    with open(args.sens_out, "w") as fh:
        fh.write("param,S1,ST\n")
        for name, s1, st in zip(bench.BOREHOLE_PARAMS, result.first_order, result.total):
            fh.write(f"{name},{s1:.17g},{st:.17g}\n")
    print(f"sensitivity ({args.base_n} base samples) -> {args.sens_out}")
    for name, s1, st in zip(bench.BOREHOLE_PARAMS, result.first_order, result.total):
        print(f"  {name:>4}: S1={s1:8.4f}  ST={st:8.4f}")
    print("gamma:", ", ".join(f"{g:.4f}" for g in gamma))

    reference = bench.mc_reference(
        bench.borehole, 8, args.mc_reference_n, sq.split_seed(args.seed, "reference")
    )
    print(f"\nreference ({args.mc_reference_n} MC samples): {reference:.6f}")
    specs = {
        "sobol": sq.SequenceSpec("sobol", 8),
        "halton": sq.SequenceSpec("halton", 8),
    }
    if args.model:
        specs["neural"] = sq.SequenceSpec("neural", 8, model_path=args.model)
    errors = {
        name: bench.integrate(spec, bench.borehole, args.n, reference=reference).errors
        for name, spec in specs.items()
    }
    checkpoints = [c for c in bench.CHECKPOINT_GRID if c <= args.n]
    with open(args.errors_out, "w") as fh:
        fh.write("N," + ",".join(specs) + "\n")
        for row, n_ck in enumerate(checkpoints):
            fh.write(f"{n_ck}," + ",".join(f"{errors[s][row]:.17g}" for s in specs) + "\n")
    print(f"error table -> {args.errors_out}")
    print("      N " + "".join(f"{s:>12}" for s in specs))
    for row, n_ck in enumerate(checkpoints):
        print(f"{n_ck:>7} " + "".join(f"{errors[s][row]:>12.4f}" for s in specs))


if __name__ == "__main__":
    main()
