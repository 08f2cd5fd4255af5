"""Seeded generators for the benchmark time series models.

Randomness comes from the counter-based Philox generator, one independent
stream per seed (or per spawned replicate).  Gaussian innovations are the
inverse normal CDF of midpoint-shifted uniforms.  Output is deterministic
per seed within a build, but not promised to be bit-identical across
platforms.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import cholesky, toeplitz
from scipy.signal import lfilter
from scipy.special import ndtri, zeta

BURNIN = 100
FGN_MAX_N = 5000


@dataclass(frozen=True)
class Arma:
    """ARMA(1,1): X_i - mu = a (X_{i-1} - mu) + b e_{i-1} + e_i, e ~ N(0, nu^2)."""

    a: float
    b: float
    nu: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if not abs(self.a) < 1:
            raise ValueError("ARMA needs |a| < 1")
        if not self.nu > 0:
            raise ValueError("nu must be positive")


@dataclass(frozen=True)
class Bilinear:
    """X_i = (alpha + beta e_i) X_{i-1} + e_i with standard normal e."""

    alpha: float = 0.9
    beta: float = 0.1

    def __post_init__(self):
        if not self.alpha ** 2 + self.beta ** 2 < 1:
            raise ValueError("bilinear model needs alpha^2 + beta^2 < 1")


@dataclass(frozen=True)
class Fgn:
    """Zero-mean Gaussian process with ACVF gamma_k = a (k + b)**-c."""

    a: float = 100.0
    b: float = 5.0
    c: float = 5.0

    def acvf(self, k) -> np.ndarray:
        return self.a * (np.asarray(k, dtype=float) + self.b) ** (-self.c)


SeriesModel = Union[Arma, Bilinear, Fgn]

MODELS = {
    "I": Arma(0.5, 0.5, 1.0, 0.0),
    "II": Bilinear(),
    "III": Fgn(100.0, 5.0, 5.0),
    "IV": Arma(0.2, -0.6, 1.0, 0.0),
}


def get_model(name: str) -> SeriesModel:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def rng_for(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def replicate_seeds(seed: int, reps: int) -> list:
    """Independent seed streams for ``reps`` replicates."""
    return np.random.SeedSequence(seed).spawn(reps)


def normals(rng: np.random.Generator, size) -> np.ndarray:
    u = rng.random(size) + 2.0 ** -54
    return ndtri(u)


@lru_cache(maxsize=2)
def _fgn_factor(model: Fgn, n: int) -> np.ndarray:
    cov = toeplitz(model.acvf(np.arange(n)))
    try:
        return cholesky(cov, lower=True)
    except np.linalg.LinAlgError:
        raise ValueError("FGN covariance is not positive definite at this length") from None


def _bilinear(model: Bilinear, e: np.ndarray) -> np.ndarray:
    x = np.empty_like(e)
    prev = np.zeros(e.shape[1:])
    for i in range(e.shape[0]):
        prev = (model.alpha + model.beta * e[i]) * prev + e[i]
        x[i] = prev
    return x


def _draw(model: SeriesModel, n: int, rng: np.random.Generator, burnin: int) -> np.ndarray:
    if isinstance(model, Arma):
        e = model.nu * normals(rng, n + burnin)
        x = lfilter([1.0, model.b], [1.0, -model.a], e)
        return x[burnin:] + model.mu
    if isinstance(model, Bilinear):
        return _bilinear(model, normals(rng, n + burnin))[burnin:]
    if isinstance(model, Fgn):
        if n > FGN_MAX_N:
            raise ValueError(f"dense FGN generation is limited to n <= {FGN_MAX_N}")
        return _fgn_factor(model, n) @ normals(rng, n)
    raise TypeError(f"unsupported model {model!r}")


def gen(model: SeriesModel, n: int, seed=0, burnin: int = BURNIN) -> np.ndarray:
    """Length-n series from ``model``; ``seed`` may be an int, SeedSequence or Generator."""
    if n < 1:
        raise ValueError("n must be positive")
    return _draw(model, n, rng_for(seed), burnin)


def gen_many(model: SeriesModel, n: int, seeds: Sequence, burnin: int = BURNIN) -> np.ndarray:
    """Array of shape (n, len(seeds)) whose columns are ``gen(model, n, seed)``."""
    if n < 1:
        raise ValueError("n must be positive")
    if isinstance(model, Bilinear):
        # innovations per replicate stream, recursion run across replicates
        e = np.column_stack([normals(rng_for(s), n + burnin) for s in seeds])
        return _bilinear(model, e)[burnin:]
    return np.column_stack([_draw(model, n, rng_for(s), burnin) for s in seeds])


@dataclass(frozen=True)
class Targets:
    sigma2: float
    v1: float
    kappa1: float
    gamma0: float


def true_targets(model: SeriesModel) -> Optional[Targets]:
    """Population (sigma^2, v_1, kappa_1) from the closed-form ACVF sums."""
    if isinstance(model, Arma):
        a, b, nu2 = model.a, model.b, model.nu ** 2
        g0 = nu2 * (1 + 2 * a * b + b * b) / (1 - a * a)
        g1 = nu2 * (1 + a * b) * (a + b) / (1 - a * a)
        sigma2 = g0 + 2 * g1 / (1 - a)
        v1 = 2 * g1 / (1 - a) ** 2
    elif isinstance(model, Bilinear):
        # gamma_k = alpha^k gamma_0 with gamma_0 = 1 / (1 - alpha^2 - beta^2)
        al = model.alpha
        g0 = 1.0 / (1 - al * al - model.beta ** 2)
        sigma2 = g0 * (1 + al) / (1 - al)
        v1 = 2 * g0 * al / (1 - al) ** 2
    elif isinstance(model, Fgn):
        a, b, c = model.a, model.b, model.c
        g0 = a * b ** (-c)
        sigma2 = a * (2 * zeta(c, b) - b ** (-c))
        v1 = 2 * a * (zeta(c - 1, b + 1) - b * zeta(c, b + 1))
    else:
        return None
    sigma2, v1 = float(sigma2), float(v1)
    return Targets(sigma2, v1, abs(v1) / sigma2 if sigma2 > 0 else float("nan"), float(g0))
