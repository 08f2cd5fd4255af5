"""LASER(q, 1): constant-time streaming long-run variance estimation.

The estimator is the quadratic form with window

    W(i, j) = (1 - |i - j|**q / t_n**q) * 1{|i - j| <= s_{max(i, j)}}

written in terms of a fixed set of running sums.  For each exponent rho the
state carries

    K_rho = sum_{k=1}^{s_n} k**rho X_{n-k}     k_rho = sum_{k=1}^{s_n} k**rho
    R_rho = sum_i X_i K_{i,rho}                r_rho = sum_i k_{i,rho}
    U_rho = sum_i k_{i,rho} X_i                V_rho = sum_i K_{i,rho}

and, for rho >= 1, a backward-difference table D^(1..rho) that lets K_rho
drop its oldest term and shift every lag by one in O(rho) work.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

Schedule = Callable[[int, int, int], Tuple[int, int]]

MEAN_MODES = ("unknown", "known_zero")

# Guards floor/ceil against values like 1000 ** (1/3) == 9.999999999999998.
_EPS = 1e-9


def _floor(v: float) -> int:
    return math.floor(v + _EPS)


def _ceil(v: float) -> int:
    return math.ceil(v - _EPS)


@dataclass(frozen=True)
class LaserConfig:
    """Hyperparameters of LASER(q, phi).

    Targets are ``s = floor(Psi * n**psi)`` and ``t = ceil(Theta * n**theta)``.
    Both move by at most one per observation and are bounded below by the
    floors ``s0`` and ``t0``.  The floors default to 5 when ``auto`` is set
    and to 0 otherwise.
    """

    q: int = 1
    phi: float = 1.0
    Psi: float = 1.0
    psi: float = 1.0 / 3.0
    Theta: float = 1.0
    theta: float = 1.0 / 3.0
    s0: Optional[int] = None
    t0: Optional[int] = None
    mean_mode: str = "unknown"
    auto: bool = False
    p: int = 1

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValueError("q must be a positive integer")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError("p must be a positive integer")
        if not (self.phi == 1 or self.phi >= 2):
            raise ValueError("phi must equal 1 or be at least 2")
        if not (self.Psi > 0 and self.Theta > 0):
            raise ValueError("Psi and Theta must be positive")
        if not (0 < self.psi < 1 and 0 < self.theta < 1):
            raise ValueError("psi and theta must lie in (0, 1)")
        if self.mean_mode not in MEAN_MODES:
            raise ValueError(f"mean_mode must be one of {MEAN_MODES}")
        default_floor = 5 if self.auto else 0
        for name in ("s0", "t0"):
            v = getattr(self, name)
            v = default_floor if v is None else int(v)
            if v < 0:
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "p", int(self.p))

    @property
    def known_zero(self) -> bool:
        return self.mean_mode == "known_zero"


def clamp_step(prev: int, target: int, floor: int) -> int:
    """Move one step towards ``max(target, floor)`` but never backwards."""
    return prev + 1 if prev < max(target, floor) else prev


def power_targets(n: int, Psi: float, psi: float, Theta: float, theta: float) -> Tuple[int, int]:
    return min(_floor(Psi * n ** psi), n - 1), min(_ceil(Theta * n ** theta), n)


def schedule(n: int, cfg: LaserConfig, prev_s: int, prev_t: int) -> Tuple[int, int]:
    """Clamped (s_n, t_n) for the n-th observation."""
    if n <= 1:
        return 0, 1
    ts, tt = power_targets(n, cfg.Psi, cfg.psi, cfg.Theta, cfg.theta)
    return clamp_step(prev_s, ts, cfg.s0), max(clamp_step(prev_t, tt, cfg.t0), 1)


def config_schedule(cfg: LaserConfig) -> Schedule:
    def fn(n: int, prev_s: int, prev_t: int) -> Tuple[int, int]:
        return schedule(n, cfg, prev_s, prev_t)
    return fn


def held_schedule(base: Schedule, hold_at: Sequence[int]) -> Schedule:
    """``base`` with s frozen at the listed times (s_n = s_{n-1})."""
    held = frozenset(hold_at)

    def fn(n: int, prev_s: int, prev_t: int) -> Tuple[int, int]:
        s, t = base(n, prev_s, prev_t)
        return (prev_s if n in held else s), t
    return fn


def diff_constants(q: int) -> list:
    """Constants c_q^(b), b = 1..q, of the backward differences of k**q."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    return [diff_weight(b + 1, b, q) for b in range(1, q + 1)]


def diff_weight(k: int, b: int, q: int) -> int:
    """b-th backward difference of k**q, zero unless k >= b + 1."""
    if k < b + 1:
        return 0
    return sum((-1) ** r * comb(b, r) * (k - r) ** q for r in range(b + 1))


def _check_scalar(x):
    if isinstance(x, (float, int)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite observation {x!r}")
        return float(x)
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite observation")
    return float(arr) if arr.ndim == 0 else arr


def lag_step(K, D: list, d: list, c: list, rho: int, s: int, s_new: int, hist, x_out):
    """Advance K_rho and its difference tables by one observation.

    ``hist[-j]`` must hold X_{n-j} for j <= min(s_new, rho + 1) and ``x_out``
    is X_{n-s-1} (only read when ``s_new == s``).  Tables are indexed so that
    entry b is level b; entry 0 is unused.
    """
    hold = s_new == s
    if s_new == 0:
        return 0.0
    x_prev = hist[-1]
    if rho == 0:
        return K + x_prev - x_out if hold else K + x_prev
    for b in range(rho, 0, -1):
        if s_new < b + 1:
            D[b] = 0.0
            d[b] = 0
            continue
        v = D[b] + c[b] * hist[-(b + 1)]
        if b < rho:
            v = v + D[b + 1]
        if hold:
            v = v - d[b] * x_out
        D[b] = v
        if s_new == b + 1:
            d[b] = c[b]
        elif not hold and b < rho:
            d[b] = d[b] + d[b + 1]
    K = K + x_prev + D[1]
    if hold:
        K = K - s ** rho * x_out
    return K


def _neumaier(total, comp, v):
    """Add ``v`` to ``total``, folding the rounding error into ``comp``."""
    t = total + v
    if isinstance(t, float):
        comp += (total - t) + v if abs(total) >= abs(v) else (v - t) + total
    else:
        comp = comp + np.where(np.abs(total) >= np.abs(v), (total - t) + v, (v - t) + total)
    return t, comp


class Components:
    """Running sums shared by every engine (one slot per exponent).

    Q, R, U and V carry compensation terms.  The unknown-mean estimate
    combines them with large cancelling mean corrections, so a few ulps of
    accumulated rounding would otherwise be amplified many times over.
    """

    def __init__(self, exps: Sequence[int], known_zero: bool = False):
        self.exps = tuple(int(e) for e in exps)
        self.known_zero = known_zero
        m = len(self.exps)
        self.n = 0
        self.s = 0
        self.t = 1
        self.Q = 0.0
        self.xbar = 0.0
        # Unknown-mean estimates are translation invariant, so observations
        # are stored relative to the first one to limit cancellation.
        self.shift = 0.0
        self.K = [0.0] * m
        self.k = [0] * m
        self.R = [0.0] * m
        self.r = [0] * m
        self.U = [0.0] * m
        self.V = [0.0] * m
        self._cQ = 0.0
        self._cR = [0.0] * m
        self._cU = [0.0] * m
        self._cV = [0.0] * m
        self.ops = 0

    def _centre(self, x):
        if self.known_zero:
            return x
        if self.n == 0:
            self.shift = x
        return x - self.shift

    @property
    def mean(self):
        return self.xbar + self.shift

    def _fold(self, x) -> None:
        if not isinstance(x, float):
            self._fold_array(x)
            return
        # scalar path with the compensated sums written out (hot loop)
        v = x * x
        t = self.Q + v
        self._cQ += (self.Q - t) + v if abs(self.Q) >= v else (v - t) + self.Q
        self.Q = t
        K, R, cR = self.K, self.R, self._cR
        for a in range(len(K)):
            v = x * K[a]
            t = R[a] + v
            cR[a] += (R[a] - t) + v if abs(R[a]) >= abs(v) else (v - t) + R[a]
            R[a] = t
        if not self.known_zero:
            k, r, U, V, cU, cV = self.k, self.r, self.U, self.V, self._cU, self._cV
            for a in range(len(K)):
                r[a] += k[a]
                v = k[a] * x
                t = U[a] + v
                cU[a] += (U[a] - t) + v if abs(U[a]) >= abs(v) else (v - t) + U[a]
                U[a] = t
                v = K[a]
                t = V[a] + v
                cV[a] += (V[a] - t) + v if abs(V[a]) >= abs(v) else (v - t) + V[a]
                V[a] = t
        self.xbar = self.xbar + (x - self.xbar) / self.n
        self.ops += 2 + 4 * len(K)

    def _fold_array(self, x) -> None:
        self.Q, self._cQ = _neumaier(self.Q, self._cQ, x * x)
        K, R, cR = self.K, self.R, self._cR
        for a in range(len(K)):
            R[a], cR[a] = _neumaier(R[a], cR[a], x * K[a])
        if not self.known_zero:
            k, r, U, V, cU, cV = self.k, self.r, self.U, self.V, self._cU, self._cV
            for a in range(len(K)):
                r[a] += k[a]
                U[a], cU[a] = _neumaier(U[a], cU[a], k[a] * x)
                V[a], cV[a] = _neumaier(V[a], cV[a], K[a])
        self.xbar = self.xbar + (x - self.xbar) / self.n
        self.ops += 2 + 4 * len(K)

    def _index(self, rho: int) -> int:
        return self.exps.index(rho)

    def _sums(self, a: int):
        """Compensated (R, U + V) of slot ``a``."""
        return self.R[a] + self._cR[a], (self.U[a] + self._cU[a]) + (self.V[a] + self._cV[a])

    def lrv(self, q: int):
        """Estimate with taper exponent q from the (0, q) slots."""
        a, b = self._index(0), self._index(q)
        if self.n == 0:
            return 0.0
        tq = float(self.t) ** q
        n = self.n
        (Ra, uva), (Rb, uvb) = self._sums(a), self._sums(b)
        R = Ra - Rb / tq
        Q = self.Q + self._cQ
        if self.known_zero:
            return (Q + 2.0 * R) / n
        r = self.r[a] - self.r[b] / tq
        uv = uva - uvb / tq
        xb = self.xbar
        return (Q + 2.0 * R + (2.0 * r - n) * xb * xb - 2.0 * xb * uv) / n

    def vq(self, q: int, p: int):
        """Lag-weighted estimate of sum |k|**q gamma_k from the (q, p+q) slots."""
        a, b = self._index(q), self._index(p + q)
        if self.n == 0:
            return 0.0
        tp = float(self.t) ** p
        (Ra, uva), (Rb, uvb) = self._sums(a), self._sums(b)
        R = Ra - Rb / tp
        if self.known_zero:
            return 2.0 * R / self.n
        r = self.r[a] - self.r[b] / tp
        uv = uva - uvb / tp
        xb = self.xbar
        return 2.0 * (R + r * xb * xb - xb * uv) / self.n


class OnlineEngine(Components):
    """Per-observation updates for phi = 1, backed by a buffer of s + 1 values."""

    def __init__(self, exps: Sequence[int], known_zero: bool = False):
        super().__init__(exps, known_zero)
        self._c = []
        self._d = []
        self._D = []
        for rho in self.exps:
            self._c.append([0] + (diff_constants(rho) if rho else []))
            self._d.append([0] * (rho + 1))
            self._D.append([0.0] * (rho + 1))
        self.buffer: deque = deque()
        # Rounding error in the difference tables never leaves the window and
        # is integrated once per level, so it grows polynomially in n.  A
        # second set of tables is grown from empty over the buffer; when it
        # spans the whole window it is exact up to fresh rounding and replaces
        # the working set.  This costs one extra grow step per observation.
        self.g = 0
        self._gK = [0.0] * len(self.exps)
        self._gd = [[0] * (rho + 1) for rho in self.exps]
        self._gD = [[0.0] * (rho + 1) for rho in self.exps]

    def push(self, x, sched: Schedule) -> None:
        x = self._centre(x)
        if self.n == 0:
            self.n = 1
            self.s, self.t = 0, 1
            self.buffer.append(x)
            self._fold(x)
            return
        n = self.n + 1
        s_new, t_new = sched(n, self.s, self.t)
        self.advance(x, s_new, t_new)

    def advance(self, x, s_new: int, t_new: int) -> None:
        s = self.s
        if not (s_new == s or s_new == s + 1) or s_new > self.n:
            raise ValueError(f"invalid subsampling step {s} -> {s_new} at n={self.n + 1}")
        if t_new < 1:
            raise ValueError("t must be at least 1")
        buf = self.buffer
        hold = s_new == s
        x_out = buf[0] if hold and s > 0 else 0.0
        K, k = self.K, self.k
        for a, rho in enumerate(self.exps):
            K[a] = lag_step(K[a], self._D[a], self._d[a], self._c[a], rho, s, s_new, buf, x_out)
            if s_new == 0:
                k[a] = 0
            elif not hold:
                k[a] += s_new ** rho
            self.ops += 2 + rho
        self._refresh(s_new)
        if hold:
            buf.popleft()
        buf.append(x)
        self.n += 1
        self.s, self.t = s_new, t_new
        self._fold(x)

    def _refresh(self, s_new: int) -> None:
        g_new = min(self.g + 1, s_new)
        if g_new == 0:
            return
        buf, g = self.buffer, self.g
        for a, rho in enumerate(self.exps):
            self._gK[a] = lag_step(self._gK[a], self._gD[a], self._gd[a], self._c[a],
                                   rho, g, g_new, buf, 0.0)
            self.ops += 1 + rho
        if g_new < s_new:
            self.g = g_new
            return
        self.K = self._gK
        self._D, self._d = self._gD, self._gd
        self.g = 0
        self._gK = [0.0] * len(self.exps)
        self._gd = [[0] * (rho + 1) for rho in self.exps]
        self._gD = [[0.0] * (rho + 1) for rho in self.exps]

    def scalar_count(self) -> int:
        tables = sum(len(c) + 2 * (len(d) + len(D)) for c, d, D in zip(self._c, self._d, self._D))
        return 7 + 10 * len(self.exps) + tables + len(self.buffer)


class StreamBase:
    """Shared surface of the public estimators."""

    _engine: Components
    q: int

    @property
    def n(self) -> int:
        return self._engine.n

    @property
    def s(self) -> int:
        return self._engine.s

    @property
    def t(self) -> int:
        return self._engine.t

    @property
    def mean(self):
        return self._engine.mean

    @property
    def ops(self) -> int:
        return self._engine.ops

    def estimate(self):
        return self._engine.lrv(self.q)

    def scalar_count(self) -> int:
        return self._engine.scalar_count()

    def extend(self, xs) -> None:
        for x in xs:
            self.update(x)

    def update(self, x) -> None:  # pragma: no cover - abstract
        raise NotImplementedError


class LaserStream(StreamBase):
    """LASER(q, 1) updated one observation at a time.

    >>> from laserlrv import LaserConfig, LaserStream
    >>> st = LaserStream(LaserConfig(q=1))
    >>> st.extend([1.0, 2.0, 3.0])
    >>> (st.n, st.s, st.t)
    (3, 1, 2)

    ``schedule`` replaces the configured power-law rule.  It is called as
    ``schedule(n, s_prev, t_prev)`` and must return ``(s_n, t_n)``.
    """

    def __init__(self, cfg: LaserConfig = LaserConfig(), schedule: Optional[Schedule] = None):
        if cfg.phi != 1:
            raise ValueError("LaserStream implements phi = 1; use RampedLaser for phi >= 2")
        self.cfg = cfg
        self.q = cfg.q
        self.schedule = schedule or config_schedule(cfg)
        self._engine = OnlineEngine((0, cfg.q), cfg.known_zero)

    def update(self, x) -> None:
        self._engine.push(_check_scalar(x), self.schedule)

    @property
    def buffer_len(self) -> int:
        return len(self._engine.buffer)


def run(xs, cfg: LaserConfig = LaserConfig(), schedule: Optional[Schedule] = None):
    """Estimates after every observation, plus the realized (s, t) sequences."""
    st = LaserStream(cfg, schedule)
    est, s_seq, t_seq = [], [], []
    for x in xs:
        st.update(x)
        est.append(st.estimate())
        s_seq.append(st.s)
        t_seq.append(st.t)
    return np.asarray(est), s_seq, t_seq
