"""LASER(q, phi) with phi >= 2: ramped subsampling in constant space.

Between resets the intended subsampling parameter ``s`` is frozen and the
effective one ``s'`` climbs by one per observation, so no observation ever
has to leave the window.  A reset happens once ``s' + 1`` would reach
``a = ceil(phi * s)``.  At that point the window must shrink back to the last
``s`` (or ``s + 1``) observations.  Those sums are collected ahead of time in
shadow components while the segment runs.  The shadows cover the final ``s``
observations before the reset, each weighted by its lag at reset time.  The
segment therefore needs at least ``s`` steps, which is why ``phi < 2`` is
not supported.
"""
from __future__ import annotations

import math
from collections import deque
from typing import Optional, Sequence

from .stream import (
    Components,
    LaserConfig,
    Schedule,
    StreamBase,
    _check_scalar,
    config_schedule,
    diff_constants,
    diff_weight,
    lag_step,
)


def check_phi(phi: float) -> None:
    if not (phi == 1 or phi >= 2):
        raise ValueError("phi must equal 1 or be at least 2")


def ramp_step(s_prime_prev: int, s_prev: int, phi: float, s_target: int) -> int:
    """Effective subsampling parameter after one step of the ramp."""
    check_phi(phi)
    if phi == 1:
        return s_target
    if s_prev <= s_prime_prev + 1 < math.ceil(phi * s_prev - 1e-9):
        return s_prime_prev + 1
    return s_target


class RampedEngine(Components):
    """Running sums of the ramped window plus shadow components."""

    def __init__(self, exps: Sequence[int], phi: float, known_zero: bool = False):
        check_phi(phi)
        if phi == 1:
            raise ValueError("RampedEngine needs phi >= 2")
        super().__init__(exps, known_zero)
        self.phi = float(phi)
        m = len(self.exps)
        self.s_intended = 0
        self.a = 0
        self._c = [[0] + (diff_constants(rho) if rho else []) for rho in self.exps]
        self._d = [[0] * (rho + 1) for rho in self.exps]
        self._D = [[0.0] * (rho + 1) for rho in self.exps]
        self._shK = [0.0] * m
        self._shk = [0] * m
        self._shD = [[0.0] * (rho + 1) for rho in self.exps]
        self._x_shadow = 0.0
        self._reset_at = 0
        self._capture_at = 0
        self.ring: deque = deque(maxlen=max(self.exps) + 1)

    def _new_segment(self, n: int, s: int) -> None:
        self.s_intended = s
        self.a = math.ceil(self.phi * s - 1e-9)
        self._reset_at = n + max(self.a - s, 1)
        self._capture_at = self._reset_at - s
        if self._capture_at == n:
            self._capture()

    def _capture(self) -> None:
        self._x_shadow = self.ring[-1]
        m = len(self.exps)
        self._shK = [0.0] * m
        self._shk = [0] * m
        self._shD = [[0.0] * (rho + 1) for rho in self.exps]

    def push(self, x, sched: Schedule) -> None:
        x = self._centre(x)
        if self.n == 0:
            self.n = 1
            self.s, self.t = 0, 1
            self.ring.append(x)
            self._new_segment(1, 0)
            self._fold(x)
            return
        n = self.n + 1
        if n == self._capture_at:
            self._capture()
        s_cand, t_new = sched(n, self.s_intended, self.t)
        if self.s + 1 < self.a:
            self._ramp(n)
        else:
            self._reset(n, s_cand)
        if self._capture_at <= n < self._reset_at:
            self._accumulate(x, self._reset_at - n)
        self.ring.append(x)
        self.n = n
        self.t = t_new
        self._fold(x)

    def _ramp(self, n: int) -> None:
        s = self.s
        K, k = self.K, self.k
        for a, rho in enumerate(self.exps):
            K[a] = lag_step(K[a], self._D[a], self._d[a], self._c[a], rho, s, s + 1, self.ring, 0.0)
            k[a] += (s + 1) ** rho
            self.ops += 2 + rho
        self.s = s + 1

    def _reset(self, n: int, s_new: int) -> None:
        s = self.s_intended
        if not (s_new == s or s_new == s + 1):
            raise ValueError(f"invalid subsampling step {s} -> {s_new} at n={n}")
        extra = s_new == s + 1
        xs = self._x_shadow
        for a, rho in enumerate(self.exps):
            w = (s + 1) ** rho if extra else 0
            self.K[a] = self._shK[a] + w * xs if extra else self._shK[a]
            self.k[a] = self._shk[a] + w
            D, d, shD = self._D[a], self._d[a], self._shD[a]
            for b in range(1, rho + 1):
                wb = diff_weight(s + 1, b, rho) if extra else 0
                D[b] = shD[b] + wb * xs if wb else shD[b]
                d[b] = diff_weight(s_new, b, rho)
            self.ops += 2 + 2 * rho
        self.s = s_new
        self._new_segment(n, s_new)

    def _accumulate(self, x, lag: int) -> None:
        for a, rho in enumerate(self.exps):
            w = lag ** rho
            self._shK[a] = self._shK[a] + w * x
            self._shk[a] += w
            shD = self._shD[a]
            for b in range(1, min(rho, lag - 1) + 1):
                shD[b] = shD[b] + diff_weight(lag, b, rho) * x
            self.ops += 2 + rho

    def scalar_count(self) -> int:
        tables = sum(len(c) + len(d) + len(D) + len(S)
                     for c, d, D, S in zip(self._c, self._d, self._D, self._shD))
        # n, s, t, Q and its compensation, xbar, s_intended, a, reset/capture
        # times, X''
        return 11 + 11 * len(self.exps) + tables + self.ring.maxlen


class RampedLaser(StreamBase):
    """LASER(q, phi) for phi >= 2 using a bounded amount of memory.

    ``s`` reports the effective (ramped) subsampling parameter, which is the
    one entering the window; ``s_intended`` is the frozen value ramped from.
    """

    def __init__(self, cfg: LaserConfig, schedule: Optional[Schedule] = None):
        if cfg.phi < 2:
            raise ValueError("RampedLaser needs phi >= 2")
        self.cfg = cfg
        self.q = cfg.q
        self.schedule = schedule or config_schedule(cfg)
        self._engine = RampedEngine((0, cfg.q), cfg.phi, cfg.known_zero)

    def update(self, x) -> None:
        self._engine.push(_check_scalar(x), self.schedule)

    @property
    def s_intended(self) -> int:
        return self._engine.s_intended
