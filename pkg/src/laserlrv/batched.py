"""LASER(q, 1) for many independent replicates at once.

Each replicate has its own (s, t) schedule, so the branches of the scalar
recursion become masks.  This is only a Monte Carlo device.  Results agree
with running ``LaserStream`` or ``AutoLaser`` on each column separately.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .nuisance import N0, psi_star, theta_star
from .stream import _EPS, LaserConfig, _neumaier, diff_constants


def _floor(v):
    return np.floor(v + _EPS).astype(np.int64)


def _ceil(v):
    return np.ceil(v - _EPS).astype(np.int64)


class BatchEngine:
    """Running sums for exponents ``exps`` and ``reps`` replicates."""

    def __init__(self, exps, reps: int, known_zero: bool = False):
        self.exps = tuple(int(e) for e in exps)
        self.reps = reps
        self.known_zero = known_zero
        m = len(self.exps)
        z = lambda: np.zeros(reps)
        zi = lambda: np.zeros(reps, dtype=np.int64)
        self.n = 0
        self.s, self.t, self.g = zi(), np.ones(reps, dtype=np.int64), zi()
        self.Q, self.xbar, self.shift = z(), z(), z()
        self.K = [z() for _ in range(m)]
        self.k = [zi() for _ in range(m)]
        self.R = [z() for _ in range(m)]
        self.r = [zi() for _ in range(m)]
        self.U = [z() for _ in range(m)]
        self.V = [z() for _ in range(m)]
        self._cQ = z()
        self._cR = [z() for _ in range(m)]
        self._cU = [z() for _ in range(m)]
        self._cV = [z() for _ in range(m)]
        self._c = [[0] + (diff_constants(rho) if rho else []) for rho in self.exps]
        self._D = [[z() for _ in range(rho + 1)] for rho in self.exps]
        self._d = [[zi() for _ in range(rho + 1)] for rho in self.exps]
        self._gK = [z() for _ in range(m)]
        self._gD = [[z() for _ in range(rho + 1)] for rho in self.exps]
        self._gd = [[zi() for _ in range(rho + 1)] for rho in self.exps]
        self._ring = np.zeros((16, reps))
        self._cols = np.arange(reps)

    def _hist(self, j):
        """j-th most recent stored value (j = 1 is X_n); ``j`` may be an array."""
        return self._ring[(self.n + 1 - j) % self._ring.shape[0], self._cols]

    def _grow_ring(self, need: int) -> None:
        cap = self._ring.shape[0]
        if need < cap:
            return
        new_cap = max(2 * cap, need + 1)
        idx = np.arange(self.n - cap + 1, self.n + 1)
        new = np.zeros((new_cap, self.reps))
        keep = idx >= 1
        new[idx[keep] % new_cap] = self._ring[idx[keep] % cap]
        self._ring = new

    def _step_table(self, K, D, d, c, rho, s, s_new, x_out):
        hold = s_new == s
        pos = s_new >= 1
        x_prev = self._hist(1)
        if rho == 0:
            return np.where(pos, K + x_prev - hold * x_out, 0.0)
        for b in range(rho, 0, -1):
            active = s_new >= b + 1
            v = D[b] + c[b] * self._hist(b + 1)
            if b < rho:
                v = v + D[b + 1]
            v = v - (hold * d[b]) * x_out
            D[b] = np.where(active, v, 0.0)
            nd = np.where(s_new == b + 1, c[b], d[b])
            if b < rho:
                nd = np.where(~hold & (s_new > b + 1), d[b] + d[b + 1], nd)
            d[b] = np.where(active, nd, 0)
        K = K + x_prev + D[1] - (hold * s ** rho) * x_out
        return np.where(pos, K, 0.0)

    def push(self, x: np.ndarray, s_new, t_new) -> None:
        if not self.known_zero:
            if self.n == 0:
                self.shift = x.copy()
            x = x - self.shift
        if self.n == 0:
            self.n = 1
            self._ring[1 % self._ring.shape[0]] = x
            self._fold(x)
            return
        s = self.s
        s_new = np.asarray(s_new, dtype=np.int64)
        self._grow_ring(int(s_new.max()) + 2)
        hold = s_new == s
        x_out = np.where(hold & (s > 0), self._hist(s + 1), 0.0)
        for a, rho in enumerate(self.exps):
            self.K[a] = self._step_table(self.K[a], self._D[a], self._d[a], self._c[a],
                                         rho, s, s_new, x_out)
            self.k[a] = np.where(s_new == 0, 0, self.k[a] + (~hold) * s_new ** rho)
        self._refresh(s_new)
        self.n += 1
        self._ring[self.n % self._ring.shape[0]] = x
        self.s = s_new
        self.t = np.asarray(t_new, dtype=np.int64)
        self._fold(x)

    def _refresh(self, s_new) -> None:
        g_new = np.minimum(self.g + 1, s_new)
        zero = np.zeros(self.reps)
        for a, rho in enumerate(self.exps):
            gK = self._step_table(self._gK[a], self._gD[a], self._gd[a], self._c[a],
                                  rho, self.g, g_new, zero)
            swap = (g_new == s_new) & (s_new > 0)
            self.K[a] = np.where(swap, gK, self.K[a])
            self._gK[a] = np.where(swap, 0.0, gK)
            for b in range(1, rho + 1):
                self._D[a][b] = np.where(swap, self._gD[a][b], self._D[a][b])
                self._d[a][b] = np.where(swap, self._gd[a][b], self._d[a][b])
                self._gD[a][b] = np.where(swap, 0.0, self._gD[a][b])
                self._gd[a][b] = np.where(swap, 0, self._gd[a][b])
        self.g = np.where((g_new == s_new) & (s_new > 0), 0, g_new)

    def _fold(self, x) -> None:
        self.Q, self._cQ = _neumaier(self.Q, self._cQ, x * x)
        for a in range(len(self.exps)):
            self.R[a], self._cR[a] = _neumaier(self.R[a], self._cR[a], x * self.K[a])
            if not self.known_zero:
                self.r[a] = self.r[a] + self.k[a]
                self.U[a], self._cU[a] = _neumaier(self.U[a], self._cU[a], self.k[a] * x)
                self.V[a], self._cV[a] = _neumaier(self.V[a], self._cV[a], self.K[a])
        self.xbar = self.xbar + (x - self.xbar) / self.n

    def _combo(self, a: int, b: int, div):
        R = (self.R[a] + self._cR[a]) - (self.R[b] + self._cR[b]) / div
        if self.known_zero:
            return R, 0.0, 0.0
        r = self.r[a] - self.r[b] / div
        uv = (((self.U[a] + self._cU[a]) + (self.V[a] + self._cV[a]))
              - ((self.U[b] + self._cU[b]) + (self.V[b] + self._cV[b])) / div)
        return R, r, uv

    def lrv(self, q: int) -> np.ndarray:
        if self.n == 0:
            return np.zeros(self.reps)
        a, b = self.exps.index(0), self.exps.index(q)
        R, r, uv = self._combo(a, b, self.t.astype(float) ** q)
        if self.known_zero:
            return (self.Q + self._cQ + 2.0 * R) / self.n
        xb = self.xbar
        return (self.Q + self._cQ + 2.0 * R + (2.0 * r - self.n) * xb * xb - 2.0 * xb * uv) / self.n

    def vq(self, q: int, p: int) -> np.ndarray:
        if self.n == 0:
            return np.zeros(self.reps)
        a, b = self.exps.index(q), self.exps.index(p + q)
        R, r, uv = self._combo(a, b, self.t.astype(float) ** p)
        if self.known_zero:
            return 2.0 * R / self.n
        xb = self.xbar
        return 2.0 * (R + r * xb * xb - xb * uv) / self.n


def _clamp(prev, target, floor):
    return np.where(prev < np.maximum(target, floor), prev + 1, prev)


class BatchLaser:
    """``reps`` independent LASER(q, 1) streams, optionally with auto selection.

    ``kappa`` may be a scalar or one value per replicate; it fixes the
    selector like ``AutoLaser(kappa=...)`` does.
    """

    def __init__(self, cfg: LaserConfig, reps: int, *, auto: Optional[bool] = None,
                 kappa=None, n0: int = N0):
        if cfg.phi != 1:
            raise ValueError("batched replicates are implemented for phi = 1 only")
        self.cfg, self.q, self.p, self.reps, self.n0 = cfg, cfg.q, cfg.p, reps, n0
        self.auto = cfg.auto if auto is None else auto
        self.fixed = kappa is not None
        self.selector = self.auto or self.fixed
        self._rate = 1.0 / (1 + 2 * cfg.q)
        if self.selector:
            self._psi_d = psi_star(cfg.q, cfg.phi, 1.0)
            self._theta_d = theta_star(cfg.q, cfg.phi, 1.0, self._psi_d)
        self.kappa = np.broadcast_to(np.asarray(kappa if self.fixed else 0.0, dtype=float),
                                     (reps,)).copy()
        self.lrv = BatchEngine((0, cfg.q), reps, cfg.known_zero)
        self.nuis = BatchEngine((cfg.q, cfg.p + cfg.q), reps, cfg.known_zero) \
            if self.selector and not self.fixed else None

    def _targets(self, n: int):
        cfg = self.cfg
        if self.selector:
            c = self.kappa ** (2.0 * self._rate)
            ts = np.minimum(_floor((self._psi_d * c) * n ** self._rate), n - 1)
            tt = np.minimum(_ceil((self._theta_d * c) * n ** self._rate), n)
        else:
            ts = np.full(self.reps, min(int(np.floor(cfg.Psi * n ** cfg.psi + _EPS)), n - 1))
            tt = np.full(self.reps, min(int(np.ceil(cfg.Theta * n ** cfg.theta - _EPS)), n))
        return ts, tt

    def update(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.reps,):
            raise ValueError(f"expected shape ({self.reps},), got {x.shape}")
        n = self.lrv.n + 1
        if self.nuis is not None and n > 1:
            sigma2 = self.lrv.lrv(self.q)
            v = self.nuis.vq(self.q, self.p)
            ok = sigma2 > 0
            self.kappa = np.where(ok, np.abs(v) / np.where(ok, sigma2, 1.0), self.kappa)
        if n == 1:
            s_new = np.zeros(self.reps, dtype=np.int64)
            t_new = np.ones(self.reps, dtype=np.int64)
        else:
            ts, tt = self._targets(n)
            s_new = _clamp(self.lrv.s, ts, self.cfg.s0)
            t_new = np.maximum(_clamp(self.lrv.t, tt, self.cfg.t0), 1)
        self.lrv.push(x, s_new, t_new)
        if self.nuis is not None:
            if n == 1:
                self.nuis.push(x, s_new, t_new)
            else:
                if n <= self.n0:
                    base = np.sqrt(n)
                else:
                    base = max(np.sqrt(self.n0), (self.p + self.q) * n ** (1.0 / (1 + 2 * (self.p + self.q))))
                ts = min(int(np.floor(base + _EPS)), n - 1)
                tt = min(int(np.ceil(base - _EPS)), n)
                self.nuis.push(x, _clamp(self.nuis.s, ts, 0), np.maximum(_clamp(self.nuis.t, tt, 0), 1))

    def estimate(self) -> np.ndarray:
        return self.lrv.lrv(self.q)

    @property
    def n(self) -> int:
        return self.lrv.n

    @property
    def s(self) -> np.ndarray:
        return self.lrv.s

    @property
    def t(self) -> np.ndarray:
        return self.lrv.t
