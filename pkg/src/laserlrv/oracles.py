"""Offline, definition-level evaluators used as ground truth.

Everything here is deliberately brute force.  The quadratic form builds the
full n x n weight matrix, so keep n in the low thousands.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


def _int_seq(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    return arr


@dataclass(frozen=True)
class BartlettWindow:
    """Bartlett window with fixed bandwidth ``bandwidth``."""

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True)
class PsrWindow:
    """Window of the progressive subsampling estimator.

    ``batch_sizes[i - 1]`` is the batch size attached to time ``i``.
    """

    batch_sizes: Sequence[int]

    def __post_init__(self):
        arr = _int_seq(self.batch_sizes, "batch_sizes")
        if np.any(arr < 1):
            raise ValueError("batch sizes must be positive")
        object.__setattr__(self, "batch_sizes", tuple(int(v) for v in arr))

    @classmethod
    def default(cls, n: int, Lambda: float = 1.0) -> "PsrWindow":
        i = np.arange(1, n + 1)
        sizes = np.minimum(np.floor(Lambda * i ** (1.0 / 3.0) + 1e-9), i)
        return cls(tuple(int(max(v, 1)) for v in sizes))


@dataclass(frozen=True)
class LaserWindow:
    """Window of the LASER estimator with taper ``1 - x**q``.

    ``t`` is the tapering parameter at the final time.  ``s_eff[i - 1]`` is
    the effective subsampling parameter realized at time ``i``.
    """

    q: int
    t: float
    s_eff: Sequence[int]

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if not self.t > 0:
            raise ValueError("t must be positive")
        arr = _int_seq(self.s_eff, "s_eff")
        if np.any(arr < 0):
            raise ValueError("s_eff must be nonnegative")
        object.__setattr__(self, "s_eff", tuple(int(v) for v in arr))


WindowSpec = Union[BartlettWindow, PsrWindow, LaserWindow]


def _check_len(spec: WindowSpec, n: int) -> None:
    seq = getattr(spec, "s_eff", None) or getattr(spec, "batch_sizes", None)
    if seq is not None and len(seq) < n:
        raise ValueError(f"window sequence has length {len(seq)} < n={n}")


def window_weight(spec: WindowSpec, n: int, i: int, j: int) -> float:
    """Return W_n(i, j) for 1-based indices."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"indices ({i}, {j}) outside 1..{n}")
    _check_len(spec, n)
    return _weight_scalar(spec, n, i, j)


def _weight_scalar(spec: WindowSpec, n: int, i: int, j: int) -> float:
    lag = abs(i - j)
    top = max(i, j)
    if isinstance(spec, BartlettWindow):
        return max(1.0 - lag / spec.bandwidth, 0.0) if lag <= spec.bandwidth else 0.0
    if isinstance(spec, PsrWindow):
        sizes = spec.batch_sizes[:n]
        mean_size = sum(sizes) / n
        if lag > sizes[top - 1]:
            return 0.0
        return 1.0 - (lag + mean_size - sizes[top - 1]) / mean_size
    if lag > spec.s_eff[top - 1]:
        return 0.0
    return 1.0 - lag ** spec.q / float(spec.t) ** spec.q


def window_matrix(spec: WindowSpec, n: int) -> np.ndarray:
    """Full n x n weight matrix of ``spec``."""
    _check_len(spec, n)
    idx = np.arange(1, n + 1)
    lag = np.abs(idx[:, None] - idx[None, :]).astype(float)
    top = np.maximum(idx[:, None], idx[None, :]) - 1
    if isinstance(spec, BartlettWindow):
        return np.where(lag <= spec.bandwidth, 1.0 - lag / spec.bandwidth, 0.0)
    if isinstance(spec, PsrWindow):
        sizes = np.asarray(spec.batch_sizes[:n], dtype=float)
        mean_size = sizes.mean()
        ell = sizes[top]
        return np.where(lag <= ell, 1.0 - (lag + mean_size - ell) / mean_size, 0.0)
    s_eff = np.asarray(spec.s_eff[:n])[top]
    return np.where(lag <= s_eff, 1.0 - lag ** spec.q / float(spec.t) ** spec.q, 0.0)


def _series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim == 0 or x.shape[0] == 0:
        raise ValueError("series must be non-empty")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    return x


def quadratic_form(series, spec: WindowSpec, *, lag_power: int = 0,
                   known_mean: float | None = None) -> Union[float, np.ndarray]:
    """n^{-1} sum_i sum_j W(i,j) |i-j|^lag_power (X_i - m)(X_j - m)'.

    ``m`` is the sample mean unless ``known_mean`` is given.  A 2-D series
    (n rows, d columns) returns the d x d matrix form.
    """
    x = _series(series)
    n = x.shape[0]
    w = window_matrix(spec, n)
    if lag_power:
        idx = np.arange(n, dtype=float)
        w = w * np.abs(idx[:, None] - idx[None, :]) ** lag_power
    y = x - (x.mean(axis=0) if known_mean is None else known_mean)
    if y.ndim == 1:
        return float(y @ w @ y / n)
    return y.T @ w @ y / n


def welford(series) -> float:
    """Sample variance with divisor n via the recursive mean/variance update."""
    x = _series(series)
    mean = 0.0
    m2 = 0.0
    for k, v in enumerate(x.tolist(), start=1):
        delta = v - mean
        mean += delta / k
        m2 += delta * (v - mean)
    return m2 / len(x)


def obm(series, ell: int) -> float:
    """Overlapping batch means with batch size ``ell``."""
    x = _series(series)
    n = len(x)
    if not 1 <= ell <= n:
        raise ValueError(f"batch size {ell} outside 1..{n}")
    csum = np.concatenate(([0.0], np.cumsum(x)))
    batch_means = (csum[ell:] - csum[:-ell]) / ell
    return float(ell * np.sum((batch_means - x.mean()) ** 2) / (n - ell + 1))


def bartlett(series, ell: float) -> float:
    """Bartlett kernel estimator written as a sum of weighted lag cross-products."""
    x = _series(series)
    n = len(x)
    if not 1 <= ell <= n:
        raise ValueError(f"bandwidth {ell} outside 1..{n}")
    y = x - x.mean()
    total = float(y @ y)
    k = 1
    while k < ell and k < n:
        total += 2.0 * (1.0 - k / ell) * float(y[k:] @ y[:-k])
        k += 1
    return total / n
