"""Inference built on streaming LRV estimates.

* half-width stopping for simulations (fixed-width confidence intervals)
* SASA+ learning-rate drops driven by a stationarity test on d_k
* an online change-point monitoring statistic
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Iterable, Optional

import numpy as np

from .minibatch import MiniBatchLaser
from .stream import LaserConfig

Penalty = Callable[[int], float]

_STD_NORMAL = NormalDist()


def normal_quantile(p: float) -> float:
    """Lower p-quantile of N(0, 1)."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return _STD_NORMAL.inv_cdf(p)


def sigma_from(estimate: float) -> float:
    """sqrt of an LRV estimate; a negative estimate maps to +inf.

    A negative estimate carries no usable scale, so any test built on it is
    treated as inconclusive rather than as one with zero width.
    """
    return math.sqrt(estimate) if estimate >= 0 else math.inf


def indicator_penalty(eps: float, n_pen: int) -> Penalty:
    """p(n) = eps * 1{n <= n_pen}."""
    return lambda n: eps if n <= n_pen else 0.0


def halfwidth(n: int, sigma_hat: float, alpha: float) -> float:
    return normal_quantile(1 - alpha / 2) * sigma_hat / math.sqrt(n)


def halfwidth_stop(n: int, sigma_hat: float, eps: float, alpha: float,
                   penalty: Optional[Penalty] = None) -> bool:
    """True iff z_{1-alpha/2} sigma_hat / sqrt(n) + p(n) < eps."""
    p = 0.0 if penalty is None else penalty(n)
    return halfwidth(n, sigma_hat, alpha) + p < eps


def terminal_n(sigmas: Iterable[float], eps: float, alpha: float,
               penalty: Optional[Penalty] = None) -> Optional[int]:
    """First n (1-based) at which the half-width test stops, else None.

    ``sigmas[n - 1]`` is the LRV standard deviation estimate after n
    observations.
    """
    for n, sig in enumerate(sigmas, start=1):
        if halfwidth_stop(n, sig, eps, alpha, penalty):
            return n
    return None


@dataclass
class HalfwidthResult:
    n_star: Optional[int]
    mean: float
    halfwidth: float
    estimate: float


def run_halfwidth(xs: Iterable[float], estimator, eps: float, alpha: float = 0.05,
                  n_pen: int = 500) -> HalfwidthResult:
    """Stream ``xs`` through ``estimator`` until the half-width test stops.

    ``n_star`` is None when the data run out first; the other fields then
    describe the final state.
    """
    pen = indicator_penalty(eps, n_pen)
    n_star = None
    for x in xs:
        estimator.update(x)
        n = estimator.n
        if halfwidth_stop(n, sigma_from(estimator.estimate()), eps, alpha, pen):
            n_star = n
            break
    n = estimator.n
    if n == 0:
        return HalfwidthResult(None, math.nan, math.inf, math.nan)
    est = estimator.estimate()
    return HalfwidthResult(n_star, float(estimator.mean), halfwidth(n, sigma_from(est), alpha), est)


@dataclass(frozen=True)
class SasaConfig:
    eta0: float = 0.1
    tau: float = 0.8
    T_burn: int = 2500
    N_min: int = 5000
    K_test: int = 500
    alpha: float = 0.05

    def __post_init__(self):
        if not (self.eta0 > 0 and 0 < self.tau < 1 and 0 < self.alpha < 1):
            raise ValueError("need eta0 > 0, 0 < tau < 1 and 0 < alpha < 1")
        if min(self.T_burn, self.N_min, self.K_test) < 1:
            raise ValueError("T_burn, N_min and K_test must be positive")


class SasaController:
    """Modified SASA+ with a mini-batch LASER estimate of the d_k variance.

    Call ``step(w, g)`` once per SGD iteration with the current iterate and
    gradient, or ``observe(d)`` to feed the diagnostic directly.  Both
    return ``(eta, dropped)``.  After a drop the d-stream is cleared, so the
    next test only sees the new regime.
    """

    def __init__(self, cfg: SasaConfig = SasaConfig(), lrv_cfg: LaserConfig = LaserConfig(q=1)):
        self.cfg = cfg
        self.lrv_cfg = lrv_cfg
        self.z = normal_quantile(1 - cfg.alpha / 2)
        self.eta = cfg.eta0
        self.k = 0
        self.t = 0
        self.drops = 0
        self.tests = 0
        self._clear()

    def _clear(self) -> None:
        self.stream = MiniBatchLaser(self.lrv_cfg)
        self._pending: list = []

    def diagnostic(self, w, g) -> float:
        w = np.asarray(w, dtype=float)
        g = np.asarray(g, dtype=float)
        if w.shape != g.shape:
            raise ValueError(f"w and g shapes differ: {w.shape} vs {g.shape}")
        return float(w @ g - 0.5 * self.eta * (g @ g))

    def step(self, w, g):
        return self.observe(self.diagnostic(w, g))

    def observe(self, d: float):
        cfg = self.cfg
        d = float(d)
        if not math.isfinite(d):
            raise ValueError("non-finite diagnostic")
        t, k = self.t, self.k
        N = t - cfg.T_burn + 1
        if t > cfg.T_burn:
            self._pending.append(d)
            if k % cfg.K_test == 0:
                self.stream.update_block(self._pending)
                self._pending = []
        elif t == cfg.T_burn:
            self.stream.update_block([d])
        self.t = t + 1
        dropped = False
        if N > cfg.N_min and k % cfg.K_test == 0:
            self.tests += 1
            if self._covers_zero(N):
                dropped = True
                self.t = 0
                self.eta *= cfg.tau
                self.drops += 1
                self._clear()
        self.k = k + 1
        return self.eta, dropped

    def _covers_zero(self, N: int) -> bool:
        st = self.stream
        if st.n != N:
            raise RuntimeError(f"stream holds {st.n} values, expected {N}")
        sig = sigma_from(st.estimate())
        return abs(st.mean) <= self.z * sig / math.sqrt(N)


def sasa_step(controller: SasaController, w, g):
    return controller.step(w, g)


def threshold(t: float) -> float:
    """w(t) = 1 / (1 + t)."""
    return 1.0 / (1.0 + t)


class CpMonitor:
    """Online change-point monitoring against the first ``m`` observations.

    The scale is either fixed (``sigma``) or taken from a streaming LRV
    estimator ``lrv`` that sees every pushed observation.
    """

    def __init__(self, m: int, sigma: Optional[float] = None, lrv=None):
        if m < 1:
            raise ValueError("m must be at least 1")
        if (sigma is None) == (lrv is None):
            raise ValueError("give exactly one of sigma and lrv")
        self.m = m
        self.sigma = sigma
        self.lrv = lrv
        self._S = np.zeros(1024)
        self.n = 0

    def push(self, x: float) -> None:
        x = float(x)
        if not math.isfinite(x):
            raise ValueError("non-finite observation")
        if self.n + 1 >= self._S.size:
            self._S = np.concatenate([self._S, np.zeros(self._S.size)])
        self._S[self.n + 1] = self._S[self.n] + x
        self.n += 1
        if self.lrv is not None:
            self.lrv.update(x)

    def extend(self, xs) -> None:
        for x in xs:
            self.push(x)

    @property
    def prefix(self) -> np.ndarray:
        return self._S[: self.n + 1]

    def scale(self) -> float:
        sig = self.sigma if self.lrv is None else sigma_from(self.lrv.estimate())
        if not (sig > 0 and math.isfinite(sig)):
            raise ValueError("degenerate scale: sigma estimate must be positive")
        return sig

    def statistic(self, k: Optional[int] = None) -> float:
        m = self.m
        k = self.n - m if k is None else k
        if k < 1 or m + k > self.n:
            raise ValueError(f"need 1 <= k <= {self.n - m}")
        S = self._S
        j = np.arange(k)
        left = S[m + j] / (m + j)
        right = (S[m + k] - S[m + j]) / (k - j)
        return float(np.max((k - j) * np.abs(left - right)) / math.sqrt(m) / self.scale())

    def weighted(self, k: Optional[int] = None) -> float:
        k = self.n - self.m if k is None else k
        return threshold(k / self.m) * self.statistic(k)

    def detect(self, critical: float, k: Optional[int] = None) -> bool:
        return self.weighted(k) > critical


def cp_statistic(monitor: CpMonitor, k: int) -> float:
    return monitor.statistic(k)
