"""Long-run covariance matrices from univariate LASER estimates.

Entry (h, k) of the LRCM estimate is

    (sigma2(X_h + X_k) - sigma2(X_h) - sigma2(X_k)) / 2

with every LRV computed under one common window.  All transformed
coordinates therefore travel through a single vector-valued stream:

    x_1, ..., x_d,   x_h + x_k for h < k,   c' x

The last one is the reference statistic.  With ``auto`` it drives the
smoothing parameters, which are then shared by every entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .nuisance import AutoLaser
from .minibatch import MiniBatchLaser
from .ramping import RampedLaser
from .stream import LaserConfig, LaserStream


@dataclass(frozen=True)
class PdAdjustment:
    """Eigenvalue floor ``a * n**-b`` for the correlation matrix.

    ``a=None`` means ``sqrt(log(n) / d)``.
    """

    a: Optional[float] = None
    b: float = 0.9

    def __post_init__(self):
        if not self.b > 0.5:
            raise ValueError("b must exceed 1/2")
        if self.a is not None and not self.a > 0:
            raise ValueError("a must be positive")

    def floor(self, n: int, d: int) -> float:
        a = math.sqrt(math.log(n) / d) if self.a is None else self.a
        return a * n ** (-self.b)


def pd_adjust(sigma, n: int, adj: PdAdjustment = PdAdjustment()) -> np.ndarray:
    """Clip the correlation eigenvalues of ``sigma`` from below and rescale."""
    S = np.asarray(sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("sigma must be a square matrix")
    if n < 1:
        raise ValueError("n must be positive")
    S = 0.5 * (S + S.T)
    v = np.diag(S).copy()
    if not np.all(v > 0):
        raise ValueError("degenerate scale: diagonal entries must be positive")
    root = np.sqrt(v)
    R = S / np.outer(root, root)
    lam, Q = np.linalg.eigh(R)
    lam = np.maximum(lam, adj.floor(n, S.shape[0]))
    out = (Q * lam) @ Q.T
    out = out * np.outer(root, root)
    return 0.5 * (out + out.T)


def pair_index(d: int):
    """(h, k) pairs with h < k in the order their sums are stored."""
    return [(h, k) for h in range(d) for k in range(h + 1, d)]


def expand(x: np.ndarray, c: np.ndarray, pairs) -> np.ndarray:
    """Map rows of ``x`` (shape (..., d)) to the transformed coordinates."""
    h = [p[0] for p in pairs]
    k = [p[1] for p in pairs]
    return np.concatenate([x, x[..., h] + x[..., k], (x @ c)[..., None]], axis=-1)


class LrcmStream:
    """Streaming d x d long-run covariance estimate.

    >>> import numpy as np
    >>> from laserlrv import LaserConfig, LrcmStream
    >>> st = LrcmStream(2, LaserConfig(q=1))
    >>> for row in np.arange(20.0).reshape(10, 2) % 3:
    ...     st.update(row)
    >>> S = st.estimate()
    >>> bool(np.array_equal(S, S.T))
    True
    """

    def __init__(self, d: int, cfg: LaserConfig = LaserConfig(), c=None, *,
                 minibatch: bool = False, hold: bool = True, kappa: Optional[float] = None):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d = d
        self.cfg = cfg
        self.c = np.ones(d) if c is None else np.asarray(c, dtype=float)
        if self.c.shape != (d,):
            raise ValueError(f"reference vector must have length {d}")
        self.pairs = pair_index(d)
        self.width = d + len(self.pairs) + 1
        self.minibatch = minibatch
        if cfg.auto or kappa is not None:
            self._est = AutoLaser(cfg, kappa=kappa, ref=self.width - 1,
                                  minibatch=minibatch, hold=hold)
        elif minibatch:
            self._est = MiniBatchLaser(cfg, hold=hold)
        elif cfg.phi == 1:
            self._est = LaserStream(cfg)
        else:
            self._est = RampedLaser(cfg)

    def _row(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"expected a vector of length {self.d}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite observation")
        return expand(x, self.c, self.pairs)

    def update(self, x) -> None:
        self._est.update(self._row(x))

    def update_block(self, xs) -> None:
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != self.d:
            raise ValueError(f"block must have shape (m, {self.d})")
        if not np.all(np.isfinite(xs)):
            raise ValueError("block contains non-finite values")
        ys = expand(xs, self.c, self.pairs)
        if self.minibatch:
            self._est.update_block(ys)
        else:
            for y in ys:
                self._est.update(y)

    def extend(self, xs) -> None:
        for x in xs:
            self.update(x)

    def _values(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros(self.width)
        return np.asarray(self._est.estimate(), dtype=float).reshape(self.width)

    def estimate(self) -> np.ndarray:
        v = self._values()
        d = self.d
        S = np.empty((d, d))
        S[np.arange(d), np.arange(d)] = v[:d]
        for i, (h, k) in enumerate(self.pairs):
            S[h, k] = S[k, h] = 0.5 * (v[d + i] - v[h] - v[k])
        return S

    def reference_estimate(self) -> float:
        """LRV of the reference statistic c'X."""
        return float(self._values()[-1])

    def adjusted(self, adj: PdAdjustment = PdAdjustment()) -> np.ndarray:
        return pd_adjust(self.estimate(), self.n, adj)

    @property
    def n(self) -> int:
        return self._est.n

    @property
    def s(self) -> int:
        return self._est.s

    @property
    def t(self) -> int:
        return self._est.t

    @property
    def mean(self) -> np.ndarray:
        return np.asarray(self._est.mean)[: self.d]
