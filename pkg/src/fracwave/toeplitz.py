"""Toeplitz products by circulant embedding and real FFTs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = ["ToeplitzSpec", "toeplitz_matvec", "build_L_block", "split_point"]


@dataclass(frozen=True, eq=False)
class ToeplitzSpec:
    """Toeplitz matrix ``T[i, j] = t_{i-j}`` given by its first column and first row.

    The matrix may be rectangular: ``len(first_col)`` rows and
    ``len(first_row)`` columns.
    """

    first_col: np.ndarray
    first_row: np.ndarray

    def __post_init__(self):
        col = np.asarray(self.first_col, dtype=float).ravel()
        row = np.asarray(self.first_row, dtype=float).ravel()
        if col.size == 0 or row.size == 0:
            raise ValueError("empty Toeplitz column or row")
        if col[0] != row[0]:
            raise ValueError(f"corner mismatch: first_col[0]={col[0]!r}, first_row[0]={row[0]!r}")
        object.__setattr__(self, "first_col", col)
        object.__setattr__(self, "first_row", row)

    @property
    def shape(self):
        return (self.first_col.size, self.first_row.size)

    def dense(self) -> np.ndarray:
        r, c = self.shape
        i = np.arange(r)[:, None]
        j = np.arange(c)[None, :]
        lag = i - j
        return np.where(lag >= 0, self.first_col[np.clip(lag, 0, r - 1)], self.first_row[np.clip(-lag, 0, c - 1)])

    @cached_property
    def symbol(self):
        """``(n_fft, rfft of the circulant's first column)``, n_fft the next power of two >= r + c - 1."""
        r, c = self.shape
        n_fft = 1 << max(r + c - 2, 0).bit_length()
        v = np.zeros(n_fft)
        v[:r] = self.first_col
        if c > 1:
            v[n_fft - c + 1:] = self.first_row[:0:-1]
        return n_fft, scipy.fft.rfft(v)


def toeplitz_matvec(spec: ToeplitzSpec, X, axis: int = -1) -> np.ndarray:
    """``X @ T.T`` for a block ``X`` of shape (M, c), i.e. ``T`` applied to every row of ``X``.

    Returns shape (M, r). A 1D ``X`` is treated as a single row. With
    ``axis=0`` the block is laid out time-major, (c, M) -> (r, M), which is
    ``T @ X``.
    """
    X = np.asarray(X, dtype=float)
    r, c = spec.shape
    if X.shape[axis] != c:
        raise ValueError(f"X has {X.shape[axis]} entries along axis {axis}, Toeplitz matrix has {c} columns")
    n_fft, sym = spec.symbol
    if axis in (0, -X.ndim) and X.ndim > 1:
        sym = sym.reshape((-1,) + (1,) * (X.ndim - 1))
    Xh = scipy.fft.rfft(X, n=n_fft, axis=axis)
    Y = scipy.fft.irfft(Xh * sym, n=n_fft, axis=axis)
    return Y[:r] if axis in (0, -X.ndim) and X.ndim > 1 else Y[..., :r]


def split_point(lo: int, hi: int) -> int:
    """Split of the half-open block range [lo, hi): the first half gets floor(size/2) blocks."""
    return lo + (hi - lo) // 2


def build_L_block(tc, lo: int, hi: int) -> ToeplitzSpec:
    """Off-diagonal block coupling [lo, mid) to [mid, hi) in the lower-triangular Toeplitz matrix with first column ``tc``.

    Entry (r, c) equals ``tc[(mid + r) - (lo + c)]``.
    """
    tc = np.asarray(tc, dtype=float)
    if not 0 <= lo < hi <= tc.size or hi - lo < 2:
        raise ValueError(f"block range [{lo}, {hi}) invalid for a {tc.size}x{tc.size} matrix")
    mid = split_point(lo, hi)
    c, r = mid - lo, hi - mid
    return ToeplitzSpec(tc[c:c + r], tc[1:c + 1][::-1])
