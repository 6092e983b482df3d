#!/usr/bin/env python3
"""RRT success-rate sweep over passage widths for several sample sources,
on the randomized 4-joint chain-in-tunnel environment."""

import argparse

from lowdisc import rrtplan as rp
from lowdisc import seqcore as sq


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--widths", default="0.40,0.44,0.48,0.52,0.56,0.60,0.64")
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--sources", default="sobol,halton,uniform")
    ap.add_argument("--k", type=int, default=10_000)
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--goal-tol", type=float, default=0.08, dest="goal_tol")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--model", help="optional neural model file to include as a source")
    ap.add_argument("--out", default="rrt_success.csv")
    args = ap.parse_args()

    widths = [float(w) for w in args.widths.split(",")]
    sources = []
    for kind in args.sources.split(","):
        seed = None
        if kind in sq.RANDOMIZED_KINDS:
            seed = sq.split_seed(args.seed, "sweep-source", kind)
        sources.append(sq.SequenceSpec(kind, 4, seed=seed))
    if args.model:
        sources.append(sq.SequenceSpec("neural", 4, model_path=args.model))

    cfg = rp.RrtConfig(max_iters=args.k, step=args.step, goal_tol=args.goal_tol)
    rows = rp.success_rate(
        widths,
        args.reps,
        sources,
        cfg,
        seed=sq.split_seed(args.seed, "sweep-envs"),
        sequence_length=args.k,
        threads=args.threads,
    )
    with open(args.out, "w") as fh:
        fh.write("source,width,success_pct\n")
        for label, width, pct in rows:
            fh.write(f"{label},{width:g},{pct:.2f}\n")
    print(f"success rates ({args.reps} reps, K={args.k}) -> {args.out}")
    labels = [s.kind for s in sources]
    print("  width " + "".join(f"{label:>10}" for label in labels))
    for width in widths:
        cells = [pct for label, w, pct in rows if w == width]
        print(f"  {width:5.2f} " + "".join(f"{pct:>10.1f}" for pct in cells))


if __name__ == "__main__":
    main()
