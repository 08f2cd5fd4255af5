"""Nuisance estimation, AMSE-optimal parameters and the automatic selector.

The optimal coefficients depend on the data only through

    kappa_q = |v_q| / sigma^2,   v_q = sum_k |k|**q gamma_k.

``NuisanceStream`` estimates v_q online with a LASER(p, phi) window, while
``AutoLaser`` feeds the running kappa estimate into the schedule of the main
estimator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .minibatch import BlockEngine, MiniBatchLaser
from .ramping import RampedEngine, RampedLaser, check_phi
from .stream import (
    LaserConfig,
    LaserStream,
    OnlineEngine,
    _ceil,
    _check_scalar,
    _floor,
    clamp_step,
    power_targets,
)

N0 = 1000


def ancillary_schedule(n: int, p: int, q: int, n0: int = N0):
    """Raw ancillary targets (s, t) used by the nuisance estimator."""
    if n <= n0:
        base = math.sqrt(n)
    else:
        base = max(math.sqrt(n0), (p + q) * n ** (1.0 / (1 + 2 * (p + q))))
    return _floor(base), _ceil(base)


def ancillary_step(n: int, p: int, q: int, prev_s: int, prev_t: int, n0: int = N0):
    """Clamped ancillary schedule: unit increments, s <= n - 1, t <= n."""
    if n <= 1:
        return 0, 1
    ts, tt = ancillary_schedule(n, p, q, n0)
    return clamp_step(prev_s, min(ts, n - 1), 0), max(clamp_step(prev_t, min(tt, n), 0), 1)


class NuisanceStream:
    """Online estimate of v_q using taper order p and memory parameter phi."""

    def __init__(self, q: int = 1, p: int = 1, phi: float = 1.0, mean_mode: str = "unknown",
                 n0: int = N0, minibatch: bool = False, hold: bool = True):
        check_phi(phi)
        if q < 1 or p < 1:
            raise ValueError("q and p must be positive integers")
        self.q, self.p, self.n0 = int(q), int(p), n0
        self.hold = hold
        known_zero = mean_mode == "known_zero"
        exps = (self.q, self.p + self.q)
        if minibatch:
            if phi != 1:
                raise ValueError("mini-batch updates are implemented for phi = 1 only")
            self._engine = BlockEngine(exps, known_zero)
        elif phi == 1:
            self._engine = OnlineEngine(exps, known_zero)
        else:
            self._engine = RampedEngine(exps, phi, known_zero)

    def schedule(self, n: int, prev_s: int, prev_t: int):
        return ancillary_step(n, self.p, self.q, prev_s, prev_t, self.n0)

    def update(self, x) -> None:
        self._engine.push(_check_scalar(x), self.schedule)

    def update_block(self, xs) -> None:
        self._engine.push_block(xs, self.schedule, self.hold)

    def estimate(self):
        return self._engine.vq(self.q, self.p)

    @property
    def n(self) -> int:
        return self._engine.n

    @property
    def s(self) -> int:
        return self._engine.s

    @property
    def t(self) -> int:
        return self._engine.t


def kappa(sigma2_prev: float, vq_now: float) -> float:
    """|v_q| / sigma^2; a nonpositive denominator is reported as an error."""
    if not sigma2_prev > 0:
        raise ValueError("degenerate scale: sigma^2 estimate must be positive")
    return abs(vq_now) / sigma2_prev


def _psi_bracket(q: int, phi: float) -> float:
    if phi > 1:
        return ((phi + 1) * (2 * q + 1) / (2 * q * (q + 1))
                - 4 * (phi ** (q + 2) - 1) * (2 * q + 1)
                / ((phi - 1) * q * (q + 1) * (q + 2) * (3 * q + 2))
                + (phi ** (2 * q + 2) - 1) / (2 * (phi - 1) * q * (q + 1) * (2 * q + 1)))
    return ((2 * q + 1) / (q * (q + 1))
            - 4 * (2 * q + 1) / (q * (q + 1) * (3 * q + 2))
            + 1 / (q * (2 * q + 1)))


def _check_kappa(kappa_q: float) -> None:
    if not kappa_q > 0:
        raise ValueError("kappa must be positive; fall back to the s0/t0 floors")


def psi_star(q: int, phi: float, kappa_q: float) -> float:
    """AMSE-optimal subsampling coefficient at psi = theta = 1/(1+2q)."""
    _check_kappa(kappa_q)
    return _psi_bracket(q, phi) ** (-1.0 / (1 + 2 * q)) * kappa_q ** (2.0 / (1 + 2 * q))


def theta_star(q: int, phi: float, kappa_q: float, Psi_star: float) -> float:
    """AMSE-optimal tapering coefficient for a given subsampling coefficient."""
    _check_kappa(kappa_q)
    P = Psi_star
    if phi > 1:
        inner = ((q + 2) * (3 * q + 2) * (phi ** (2 * q + 2) - 1)
                 / (4 * (2 * q + 1) ** 2 * (phi ** (q + 2) - 1))
                 + P ** (-2 * q - 1) * kappa_q ** 2 * (phi - 1) * (q + 1) * (q + 2) * (3 * q + 2)
                 / (4 * (2 * q + 1) * (phi ** (q + 2) - 1)))
    else:
        inner = ((q + 1) * (3 * q + 2) / (2 * (2 * q + 1) ** 2)
                 + P ** (-2 * q - 1) * kappa_q ** 2 * (q + 1) * (3 * q + 2) / (4 * (2 * q + 1)))
    return inner ** (1.0 / q) * P


def variance_constant(psi: float, Psi: float, theta: float, Theta: float, q: int, phi: float) -> float:
    """Leading variance constant of LASER(q, phi), in units of sigma^4."""
    le, eq, ge = psi <= theta, psi == theta, psi >= theta
    if phi > 1:
        return (le * 2 * Psi * (phi + 1) / (psi + 1)
                - eq * 8 * Psi ** (q + 1) * Theta ** (-q) * (phi ** (q + 2) - 1)
                / ((phi - 1) * (q + 1) * (q + 2) * (psi * q + psi + 1))
                + ge * 2 * Psi ** (2 * q + 1) * Theta ** (-2 * q) * (phi ** (2 * q + 2) - 1)
                / ((phi - 1) * (q + 1) * (2 * q + 1) * (2 * psi * q + psi + 1)))
    return (le * 4 * Psi / (psi + 1)
            - eq * 8 * Psi ** (q + 1) * Theta ** (-q) / ((q + 1) * (psi * q + psi + 1))
            + ge * 4 * Psi ** (2 * q + 1) * Theta ** (-2 * q) / ((2 * q + 1) * (2 * psi * q + psi + 1)))


def amse_constant(psi: float, Psi: float, theta: float, Theta: float, q: int, phi: float,
                  kappa_q: float) -> float:
    """Standardized AMSE, n^{2q/(1+2q)} MSE / sigma^4, at psi = theta = 1/(1+2q)."""
    rate = 1.0 / (1 + 2 * q)
    if abs(psi - theta) > 1e-12 or abs(psi - rate) > 1e-12:
        raise ValueError("AMSE constant is defined only for psi = theta = 1/(1+2q)")
    return kappa_q ** 2 * Theta ** (-2 * q) + variance_constant(rate, Psi, rate, Theta, q, phi)


@dataclass(frozen=True)
class OptimalParams:
    Psi_star: float
    Theta_star: float
    phi_star: int


def optimal_params(q: int, phi: float, kappa_q: float, constant_space: bool = False) -> OptimalParams:
    P = psi_star(q, phi, kappa_q)
    return OptimalParams(P, theta_star(q, phi, kappa_q, P), 2 if constant_space else 1)


def oracle_config(q: int, phi: float, kappa_q: float, **kw) -> LaserConfig:
    """LaserConfig with the AMSE-optimal parameters for a known kappa."""
    opt = optimal_params(q, phi, kappa_q)
    rate = 1.0 / (1 + 2 * q)
    return LaserConfig(q=q, phi=phi, Psi=opt.Psi_star, psi=rate, Theta=opt.Theta_star,
                       theta=rate, **kw)


class AutoLaser:
    """LASER(q, phi) whose (s, t) follow the running estimate of kappa_q.

    Before each update, kappa-hat = |v-hat_n| / sigma-hat_n^2 from the state
    after the previous observation.  It is carried over unchanged while the
    LRV estimate is not positive.  Passing ``kappa`` fixes it instead, which
    reproduces the oracle-parameter schedule.  ``ref`` selects the component
    that drives the selector when the stream is vector valued.
    """

    def __init__(self, cfg: LaserConfig, *, kappa: Optional[float] = None,
                 ref: Optional[int] = None, minibatch: bool = False, hold: bool = True):
        q, phi = cfg.q, cfg.phi
        self.cfg = cfg
        self.q = q
        self.ref = ref
        self.minibatch = minibatch
        self._psi_d = psi_star(q, phi, 1.0)
        self._theta_d = theta_star(q, phi, 1.0, self._psi_d)
        self._rate = 1.0 / (1 + 2 * q)
        self.fixed = kappa is not None
        self.kappa = float(kappa) if kappa is not None else 0.0
        if minibatch:
            self.lrv = MiniBatchLaser(cfg, schedule=self.schedule, hold=hold)
        elif phi == 1:
            self.lrv = LaserStream(cfg, schedule=self.schedule)
        else:
            self.lrv = RampedLaser(cfg, schedule=self.schedule)
        self.nuis = None if self.fixed else NuisanceStream(
            q, cfg.p, phi, cfg.mean_mode, minibatch=minibatch, hold=hold)

    def schedule(self, n: int, prev_s: int, prev_t: int):
        if n <= 1:
            return 0, 1
        c = self.kappa ** (2.0 * self._rate)
        ts, tt = power_targets(n, self._psi_d * c, self._rate, self._theta_d * c, self._rate)
        return clamp_step(prev_s, ts, self.cfg.s0), max(clamp_step(prev_t, tt, self.cfg.t0), 1)

    def _pick(self, v):
        return v if self.ref is None else v[self.ref]

    def _refresh(self) -> None:
        if self.fixed or self.lrv.n == 0:
            return
        sigma2 = float(self._pick(self.lrv.estimate()))
        if sigma2 > 0:
            self.kappa = kappa(sigma2, float(self.nuis.estimate()))

    def update(self, x) -> None:
        x = _check_scalar(x)
        self._refresh()
        self.lrv.update(x)
        if self.nuis is not None:
            self.nuis.update(self._pick(x))

    def update_block(self, xs) -> None:
        if not self.minibatch:
            for x in xs:
                self.update(x)
            return
        xs = np.asarray(xs, dtype=float)
        self._refresh()
        self.lrv.update_block(xs)
        if self.nuis is not None:
            self.nuis.update_block(xs if self.ref is None else xs[:, self.ref])

    def extend(self, xs) -> None:
        for x in xs:
            self.update(x)

    def estimate(self):
        return self.lrv.estimate()

    @property
    def n(self) -> int:
        return self.lrv.n

    @property
    def s(self) -> int:
        return self.lrv.s

    @property
    def t(self) -> int:
        return self.lrv.t

    @property
    def mean(self):
        return self.lrv.mean


def make_estimator(cfg: LaserConfig, *, minibatch: bool = False, hold: bool = True,
                   kappa: Optional[float] = None):
    """Pick the estimator class that matches ``cfg``."""
    if cfg.auto or kappa is not None:
        return AutoLaser(cfg, kappa=kappa, minibatch=minibatch, hold=hold)
    if minibatch:
        return MiniBatchLaser(cfg, hold=hold)
    if cfg.phi == 1:
        return LaserStream(cfg)
    return RampedLaser(cfg)
