#!/usr/bin/env python3
"""Optimal smoothing constants and AMSE for q, phi in {1, 2, 3} at kappa = 1.

The last column divides by the Bartlett AMSE constant for q = 1 and by the
flat-top reference for q = 3.
"""
from laserlrv import amse_constant, optimal_params

BASE = {1: 2.29, 3: 3.39}

print("q phi   Psi*      Theta*    AMSE      ratio")
for q in (1, 2, 3):
    r = 1 / (1 + 2 * q)
    for phi in (1, 2, 3):
        o = optimal_params(q, phi, 1.0)
        val = amse_constant(r, o.Psi_star, r, o.Theta_star, q, phi, 1.0)
        ratio = f"{val / BASE[q]:.4f}" if q in BASE else "-"
        print(f"{q} {phi}   {o.Psi_star:.6f}  {o.Theta_star:.6f}  {val:.6f}  {ratio}")
