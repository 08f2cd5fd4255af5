"""Block (mini-batch) updates of LASER(q, 1).

A block of m observations is absorbed in O(m) vectorized work.  The
per-observation schedule inside the block is computed first.  Every
recursive quantity (K_0, the difference tables, K_q) then becomes a vector
of increments whose cumulative sum reproduces the online recursion exactly.
Only the end-of-block scalars and the trailing s + 1 observations are kept.

With ``hold=True`` the subsampling parameter is kept fixed at the first
step of every block (``s_{n_j + 1} = s_{n_j}``), which is the convention the
block recursions are usually stated under.  The increment formulation does
not need it, so ``hold=False`` follows the plain online schedule.
"""
from __future__ import annotations

from math import comb
from typing import Optional, Sequence

import numpy as np

from .stream import (
    Components, LaserConfig, Schedule, StreamBase, _neumaier, config_schedule, diff_constants,
)


def _diff_weight_vec(k: np.ndarray, b: int, q: int) -> np.ndarray:
    k = k.astype(np.int64)
    v = np.zeros_like(k)
    for r in range(b + 1):
        v += (-1) ** r * comb(b, r) * (k - r) ** q
    return np.where(k >= b + 1, v, 0)


class BlockEngine(Components):
    """Checkpoint-only state of LASER with exponents ``exps``."""

    def __init__(self, exps: Sequence[int], known_zero: bool = False):
        super().__init__(exps, known_zero)
        self._c = [[0] + (diff_constants(rho) if rho else []) for rho in self.exps]
        self._D: list = []
        self.buffer: Optional[np.ndarray] = None
        self.item_shape: tuple = ()
        self.r = [0.0] * len(self.exps)

    def _start(self, x0: np.ndarray, item_shape: tuple) -> None:
        d = x0.shape[0]
        self.item_shape = item_shape
        self.shift = np.zeros(d) if self.known_zero else x0.copy()
        x0 = x0 - self.shift
        m = len(self.exps)
        self.n, self.s, self.t = 1, 0, 1
        self.Q = x0 * x0
        self.xbar = x0.copy()
        self.K = [np.zeros(d) for _ in range(m)]
        self.R = [np.zeros(d) for _ in range(m)]
        self.U = [np.zeros(d) for _ in range(m)]
        self.V = [np.zeros(d) for _ in range(m)]
        self._cQ = np.zeros(d)
        self._cR = [np.zeros(d) for _ in range(m)]
        self._cU = [np.zeros(d) for _ in range(m)]
        self._cV = [np.zeros(d) for _ in range(m)]
        self.k = [0.0] * m
        self.r = [0.0] * m
        self._D = [np.zeros((rho + 1, d)) for rho in self.exps]
        self.buffer = x0[None, :].copy()

    def push_block(self, xs, sched: Schedule, hold: bool = True) -> None:
        xs = np.asarray(xs, dtype=float)
        if xs.ndim == 0 or xs.shape[0] == 0:
            raise ValueError("block must be non-empty")
        if not np.all(np.isfinite(xs)):
            raise ValueError("block contains non-finite values")
        item_shape = xs.shape[1:]
        X = xs.reshape(xs.shape[0], -1)
        if self.n == 0:
            self._start(X[0], item_shape)
            X = X[1:]
        elif item_shape != self.item_shape:
            raise ValueError(f"item shape {item_shape} != {self.item_shape}")
        m = X.shape[0]
        if m == 0:
            return
        X = X - self.shift
        n0, s0 = self.n, self.s

        cur = np.empty(m, dtype=np.int64)
        ps, t = s0, self.t
        for j in range(m):
            s_i, t = sched(n0 + 1 + j, ps, t)
            if hold and j == 0:
                s_i = ps
            if not (s_i == ps or s_i == ps + 1) or s_i > n0 + j:
                raise ValueError(f"invalid subsampling step {ps} -> {s_i} at n={n0 + 1 + j}")
            cur[j] = s_i
            ps = s_i
        prev = np.empty(m, dtype=np.int64)
        prev[0] = s0
        prev[1:] = cur[:-1]

        z = np.vstack((self.buffer, X))
        zi = np.arange(m) + s0 + 1
        hold_mask = cur == prev
        pos = (cur >= 1)[:, None]
        x_prev = z[zi - 1]
        x_out = z[zi - prev - 1] * (hold_mask & (prev >= 1))[:, None]
        grow = ~hold_mask

        for a, rho in enumerate(self.exps):
            if rho == 0:
                inc = (x_prev - x_out) * pos
            else:
                c, D = self._c[a], self._D[a]
                upper = None
                for b in range(rho, 0, -1):
                    active = cur >= b + 1
                    src = z[np.where(active, zi - b - 1, 0)]
                    inc = c[b] * src
                    if upper is not None:
                        inc += upper
                    drop = (_diff_weight_vec(prev, b, rho) * hold_mask).astype(float)
                    inc -= drop[:, None] * x_out
                    inc *= active[:, None]
                    upper = D[b] + np.cumsum(inc, axis=0)
                    D[b] = upper[-1]
                removal = ((prev.astype(float) ** rho) * hold_mask)[:, None] * x_out
                inc = (x_prev + upper - removal) * pos
            Kvec = self.K[a] + np.cumsum(inc, axis=0)
            kvec = self.k[a] + np.cumsum(grow * cur.astype(float) ** rho)
            self.R[a], self._cR[a] = _neumaier(self.R[a], self._cR[a], np.einsum("ij,ij->j", X, Kvec))
            if not self.known_zero:
                self.r[a] += float(kvec.sum())
                self.U[a], self._cU[a] = _neumaier(self.U[a], self._cU[a], kvec @ X)
                self.V[a], self._cV[a] = _neumaier(self.V[a], self._cV[a], Kvec.sum(axis=0))
            self.K[a] = Kvec[-1].copy()
            self.k[a] = float(kvec[-1])
            self.ops += (4 + 3 * rho) * m
        self.Q, self._cQ = _neumaier(self.Q, self._cQ, np.einsum("ij,ij->j", X, X))
        self.xbar = (n0 * self.xbar + X.sum(axis=0)) / (n0 + m)
        self.n = n0 + m
        self.s = int(cur[-1])
        self.t = int(t)
        self.buffer = z[-(self.s + 1):].copy()
        if self.s + 1 <= m:
            self._recompute()

    def _recompute(self) -> None:
        # Rebuild K and the difference tables from the trailing buffer so
        # that rounding error in the cumulative sums does not build up.  Only
        # done when the block is at least as long as the window, which keeps
        # the work proportional to the block length.
        s = self.s
        if s == 0:
            return
        lags = np.arange(1, s + 1)
        past = self.buffer[-2::-1][:s]
        for a, rho in enumerate(self.exps):
            self.K[a] = (lags.astype(float) ** rho) @ past
            for b in range(1, rho + 1):
                w = _diff_weight_vec(lags, b, rho).astype(float)
                self._D[a][b] = w @ past
            self.ops += (1 + rho) * s

    def _shape(self, v):
        if self.n == 0:
            return 0.0
        v = np.asarray(v).reshape(self.item_shape)
        return float(v) if v.ndim == 0 else v

    def lrv(self, q: int):
        return self._shape(super().lrv(q)) if self.n else 0.0

    def vq(self, q: int, p: int):
        return self._shape(super().vq(q, p)) if self.n else 0.0

    @property
    def mean(self):
        return self._shape(self.xbar + self.shift)

    def scalar_count(self) -> int:
        d = 1 if self.buffer is None else self.buffer.shape[1]
        tables = sum(len(c) + D.shape[0] * d for c, D in zip(self._c, self._D))
        n_buf = 0 if self.buffer is None else self.buffer.size
        return 5 + 6 * len(self.exps) * d + tables + n_buf


class MiniBatchLaser(StreamBase):
    """LASER(q, 1) updated at checkpoints via ``update_block``."""

    def __init__(self, cfg: LaserConfig = LaserConfig(), schedule: Optional[Schedule] = None,
                 hold: bool = True):
        if cfg.phi != 1:
            raise ValueError("mini-batch updates are implemented for phi = 1 only")
        self.cfg = cfg
        self.q = cfg.q
        self.hold = hold
        self.schedule = schedule or config_schedule(cfg)
        self._engine = BlockEngine((0, cfg.q), cfg.known_zero)

    def update_block(self, xs) -> None:
        self._engine.push_block(xs, self.schedule, self.hold)

    def update(self, x) -> None:
        self.update_block(np.asarray(x, dtype=float)[None, ...])

    @property
    def buffer_len(self) -> int:
        b = self._engine.buffer
        return 0 if b is None else b.shape[0]


def block_starts(checkpoints: Sequence[int]) -> list:
    """Times at which the held convention freezes s, for a checkpoint grid.

    The first block starts right after the first observation, so a grid
    ``n_1 < n_2 < ...`` holds s at 2, n_1 + 1, n_2 + 1, ...
    """
    starts = [2]
    starts.extend(int(c) + 1 for c in checkpoints[:-1])
    return starts


def split_blocks(xs, checkpoints: Sequence[int]):
    """Cut ``xs`` at the checkpoint times (1-based, increasing, last <= len)."""
    xs = np.asarray(xs, dtype=float)
    edges = [0] + [int(c) for c in checkpoints]
    if any(b <= a for a, b in zip(edges, edges[1:])) or edges[-1] > len(xs):
        raise ValueError("checkpoints must be increasing and within the series")
    return [xs[a:b] for a, b in zip(edges, edges[1:])]


def stride_checkpoints(n: int, m: int) -> list:
    if m < 1:
        raise ValueError("stride must be positive")
    pts = list(range(m, n + 1, m))
    if not pts or pts[-1] != n:
        pts.append(n)
    return pts
