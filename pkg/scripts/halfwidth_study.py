#!/usr/bin/env python3
"""Terminal sample sizes of the half-width rule on IID and AR(1) streams.

For each tolerance eps the rule z sigma_hat / sqrt(n) + eps 1{n <= 500} < eps
is run on independent seeds with LASER(1,2); the summary is compared with
the inversion (z sigma / eps)^2 at the true LRV sigma^2.
"""
import argparse
import math

import numpy as np

from laserlrv import Arma, LaserConfig, RampedLaser, gen, normal_quantile, replicate_seeds, run_halfwidth, true_targets


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--alpha", type=float, default=0.05)
    args = ap.parse_args()
    z = normal_quantile(1 - args.alpha / 2)
    print("model,eps,target,median_n,q10,q90,coverage")
    for m_idx, (name, model) in enumerate((("iid", Arma(0.0, 0.0)), ("ar0.5", Arma(0.5, 0.0)))):
        sigma2 = true_targets(model).sigma2
        for e_idx, eps in enumerate((0.2, 0.1, 0.05)):
            target = (z * math.sqrt(sigma2) / eps) ** 2
            stars, hits = [], 0
            for s in replicate_seeds(100 * m_idx + e_idx, args.seeds):
                x = gen(model, int(20 * target) + 1000, s)
                res = run_halfwidth(x, RampedLaser(LaserConfig(q=1, phi=2)), eps, args.alpha)
                stars.append(math.inf if res.n_star is None else res.n_star)
                hits += abs(res.mean) <= res.halfwidth
            stars = np.array(stars)
            print(f"{name},{eps},{target:.0f},{np.median(stars):.0f},{np.quantile(stars, 0.1):.0f},"
                  f"{np.quantile(stars, 0.9):.0f},{hits / args.seeds:.2f}")


if __name__ == "__main__":
    main()
