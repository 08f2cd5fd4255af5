import numpy as np


def rel_err(a, b, floor=1e-300):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), floor))


def ar1(rng, n, a=0.5, mu=0.0):
    e = rng.standard_normal(n + 50)
    x = np.empty_like(e)
    prev = 0.0
    for i, v in enumerate(e):
        prev = a * prev + v
        x[i] = prev
    return x[50:] + mu
