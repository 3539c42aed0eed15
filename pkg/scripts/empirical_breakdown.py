"""Empirical breakdown dichotomy on the unit square.

For each repetition draw n equal-weight atoms, then move the first k atoms far
along the minimal-halfspace direction at u and record whether the local
transport error near u grows with the distance.  The theory predicts growth
exactly when k / n >= HD(u).  Prints one row per (u, k) with the agreement
rate and writes every profile to a CSV.

    python scripts/empirical_breakdown.py --reps 20 --out dichotomy.csv
"""

import argparse
import csv
import time

import numpy as np

from sdot_robust.depth import depth
from sdot_robust.measures import DiscreteMeasure, ReferenceMeasure
from sdot_robust.robustness import ExperimentConfig, divergence_experiment
from sdot_robust.sdot import SolveConfig, solve


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--budget", type=int, default=100_000, help="solver sample size")
    p.add_argument("--integral-budget", type=int, default=100_000)
    p.add_argument("--points", default="0.3,0.4;0.5,0.5;0.2,0.7",
                   help="semicolon-separated points u")
    p.add_argument("--out", default="dichotomy.csv")
    args = p.parse_args(argv)

    ref = ReferenceMeasure.parse("cube:2")
    points = [tuple(float(x) for x in s.split(",")) for s in args.points.split(";")]
    cases = []
    for u in points:
        need = int(np.ceil(round(args.n * depth(ref, u).value, 9)))
        cases += [(u, k) for k in (max(need - 1, 1), max(need, 1)) if k <= args.n]
    cases = sorted(set(cases))

    tally = {c: [0, 0] for c in cases}
    start = time.perf_counter()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rep", "u1", "u2", "k", "predicted", "diverges", "bounded", "slope",
                    "threshold", *[f"integral_R{j}" for j in range(4)]])
        for rep in range(args.reps):
            rng = np.random.default_rng(1000 + rep)
            target = DiscreteMeasure.from_points(rng.uniform(size=(args.n, 2)))
            cfg = ExperimentConfig(solve=SolveConfig(mc_budget=args.budget, seed=rep + 1),
                                   integral_budget=args.integral_budget, seed=rep + 1)
            clean = solve(ref, target, cfg.solve)
            for u, k in cases:
                prof = divergence_experiment(ref, target, u, range(k), args.delta, config=cfg, clean=clean)
                hit = prof.diverges if prof.predicted_diverges else prof.bounded(cfg.bounded_factor)
                tally[(u, k)][0] += hit
                tally[(u, k)][1] += 1
                w.writerow([rep, *u, k, prof.predicted_diverges, prof.diverges, prof.bounded(),
                            prof.slope, prof.slope_threshold, *prof.integrals])

    print(f"{'u':>12s} {'HD':>6s} {'k/n':>6s} {'predicted':>10s} {'agree':>8s}")
    total = [0, 0]
    for (u, k), (hit, cnt) in tally.items():
        hd = depth(ref, u).value
        pred = "diverges" if k / args.n >= hd - 1e-12 else "bounded"
        print(f"{str(u):>12s} {hd:6.3f} {k / args.n:6.3f} {pred:>10s} {hit:>3d}/{cnt:<3d}")
        total[0] += hit
        total[1] += cnt
    print(f"overall agreement {total[0]}/{total[1]}  ({time.perf_counter() - start:.0f} s), wrote {args.out}")


if __name__ == "__main__":
    main()
