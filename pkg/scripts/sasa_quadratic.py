#!/usr/bin/env python3
"""SGD with the SASA+ learning-rate controller on a noisy quadratic.

Minimizes E{(w - c)^2 / 2} with gradients g = w - c + noise.  The controller
drops eta whenever the CI for the mean of d_k = w g - eta |g|^2 / 2 covers 0.
"""
import argparse

import numpy as np

from laserlrv import SasaConfig, SasaController


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--dim", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    c = rng.standard_normal(args.dim)
    w = np.zeros(args.dim)
    ctl = SasaController(SasaConfig(eta0=0.5, tau=0.5))
    eta = ctl.eta
    for k in range(args.steps):
        g = w - c + rng.standard_normal(args.dim)
        # d_k is built from the iterate before the step
        eta_next, dropped = ctl.step(w, g)
        w = w - eta * g
        if dropped:
            print(f"step {k}: eta {eta:.4g} -> {eta_next:.4g}, |w - c| = {np.linalg.norm(w - c):.4g}")
        eta = eta_next
    print(f"final eta {eta:.4g}, drops {ctl.drops}, tests {ctl.tests}, |w - c| = {np.linalg.norm(w - c):.4g}")


if __name__ == "__main__":
    main()
