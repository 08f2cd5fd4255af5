#!/usr/bin/env python3
"""Automatic versus oracle-parameter LASER(1,1) trajectories on one model.

Prints, at log-spaced n, the median over replicates of the automatic
estimate, the oracle-parameter estimate, their relative gap and the median
kappa-hat.
"""
import argparse

import numpy as np

from laserlrv import BatchLaser, LaserConfig, gen_many, replicate_seeds, true_targets
from laserlrv.simgen import get_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="I")
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=8)
    args = ap.parse_args()

    model = get_model(args.model)
    tgt = true_targets(model)
    cfg = LaserConfig(q=1, auto=True)
    auto = BatchLaser(cfg, args.reps)
    oracle = BatchLaser(cfg, args.reps, kappa=tgt.kappa1)
    x = gen_many(model, args.n, replicate_seeds(args.seed, args.reps))
    marks = set(np.unique(np.geomspace(100, args.n, 15).astype(int)).tolist())

    print(f"# sigma2 = {tgt.sigma2:.6g}, kappa1 = {tgt.kappa1:.6g}")
    print("n,auto,oracle,gap,kappa_hat")
    for i in range(args.n):
        auto.update(x[i])
        oracle.update(x[i])
        if i + 1 in marks:
            a, o = auto.estimate(), oracle.estimate()
            gap = np.median(np.abs(a - o) / np.abs(o))
            print(f"{i + 1},{np.median(a):.6g},{np.median(o):.6g},{gap:.4g},{np.median(auto.kappa):.4g}")


if __name__ == "__main__":
    main()
