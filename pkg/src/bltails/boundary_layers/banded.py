"""Batched banded LU without pivoting.

Every per-mode matrix handled here has a positive definite Hermitian part, so
elimination without pivoting is stable. Storage is ``ab[batch, i, bw + j - i]``.
"""

from __future__ import annotations

import numpy as np


class BatchedBandLU:
    def __init__(self, ab: np.ndarray, bw: int, overwrite: bool = False):
        self.bw = bw
        nb, n, width = ab.shape
        if width != 2 * bw + 1:
            raise ValueError("band storage width must be 2*bw+1")
        self.n = n
        lu = ab if overwrite else ab.copy()
        r = np.arange(1, bw + 1)
        # (row offset r, column offset c) -> band column bw + c - r
        R, C = np.meshgrid(r, r, indexing="ij")
        band_col = bw + C - R
        for i in range(n):
            piv = lu[:, i, bw]
            kmax = min(bw, n - 1 - i)
            if kmax == 0:
                break
            rows = i + r[:kmax]
            # column i in rows i+r sits at band column bw - r
            l = lu[:, rows, bw - r[:kmax]] / piv[:, None]
            lu[:, rows, bw - r[:kmax]] = l
            u = lu[:, i, bw + 1 : bw + 1 + kmax]
            Rk, Bk = R[:kmax, :kmax] + i, band_col[:kmax, :kmax]
            lu[:, Rk, Bk] -= l[:, :, None] * u[:, None, :]
        self.lu = lu

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve for right-hand sides of shape (batch, n)."""
        lu, bw, n = self.lu, self.bw, self.n
        y = b.astype(lu.dtype, copy=True)
        for i in range(1, n):
            k = min(bw, i)
            # L[i, i-r] at band column bw - r
            y[:, i] -= np.einsum("br,br->b", lu[:, i, bw - k : bw], y[:, i - k : i])
        x = y
        for i in range(n - 1, -1, -1):
            k = min(bw, n - 1 - i)
            if k:
                x[:, i] -= np.einsum("br,br->b", lu[:, i, bw + 1 : bw + 1 + k], x[:, i + 1 : i + 1 + k])
            x[:, i] /= lu[:, i, bw]
        return x
