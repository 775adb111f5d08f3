"""Independent reference solvers used to validate the lifted discretization.

The strip solver treats a rational normal n = e_d in d = 2. For each grid
value c of theta_2 the lifted problem decouples into a two-dimensional
half-strip problem in (theta_1, t), which is solved here by strong-form
Fourier x Chebyshev collocation with a dense direct solve.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .errors import ConfigError
from .geometry import Frame
from .periodic_fields import TrigTensor


def chebyshev(n: int, length: float) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev-Gauss-Lobatto points on [0, length] (increasing) and the differentiation matrix."""
    j = np.arange(n + 1)
    x = np.cos(np.pi * j / n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2
    c *= (-1.0) ** j
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1 / c) / (X + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    # map [-1, 1] -> [0, length], reversed so points increase
    t = (1 - x) * length / 2
    return t, -D * 2 / length


def fourier_diff(n: int) -> np.ndarray:
    """Spectral differentiation matrix on n equispaced points of [0, 1), Nyquist mode dropped."""
    k = np.fft.fftfreq(n, 1.0 / n)
    k[np.abs(k) == n // 2] = 0
    F = np.fft.fft(np.eye(n), axis=0)
    return np.real(np.fft.ifft(2j * np.pi * k[:, None] * F, axis=0))


def evaluate_trig(trig: TrigTensor, points: np.ndarray) -> np.ndarray:
    """Direct evaluation of the trigonometric polynomial at points (P, d); returns (P, d, d, m, m)."""
    out = np.zeros((len(points), trig.d, trig.d, trig.m, trig.m), dtype=complex)
    for k, c in trig.coeffs.items():
        out += np.exp(2j * np.pi * points @ np.asarray(k, dtype=float))[:, None, None, None, None] * c
    return out.real


class StripSolution:
    def __init__(self, t: np.ndarray, values: np.ndarray, length: float):
        # values: (m, n_cheb+1, N1, N2) on Chebyshev points t
        self.t, self.values, self.length = t, values, length
        self._interp = BarycentricInterpolator(t, np.moveaxis(values, 1, 0))

    def at(self, t_eval: np.ndarray) -> np.ndarray:
        """Values (m, len(t), N1, N2); beyond the strip length the plateau value is used."""
        t_eval = np.minimum(np.asarray(t_eval, dtype=float), self.length)
        return np.moveaxis(self._interp(t_eval), 0, 1)


def strip_dirichlet(
    coef: TrigTensor, frame: Frame, phi: np.ndarray, length: float = 8.0, n_cheb: int = 96
) -> StripSolution:
    """Solve -(d_1, d_t) . B (d_1, d_t) V = 0, V(., 0) = phi, d_t V(., length) = 0 for n = e_2.

    B(theta, t) = M^T coef(theta - t n) M with ``coef`` used as given, matching
    LiftedOperator. ``phi`` has shape (m, N, N).
    """
    if coef.d != 2:
        raise ConfigError("the strip oracle is two-dimensional")
    if not np.allclose(np.abs(frame.n), [0.0, 1.0]):
        raise ConfigError("the strip oracle needs the normal n = +-e_2")
    m = coef.m
    n = phi.shape[-1]
    t, Dt = chebyshev(n_cheb, length)
    Dx = fourier_diff(n)
    nt = t.size
    M = frame.M
    # tangential direction is the first axis, up to the frame's sign
    sgn = float(frame.N[0, 0])
    x1 = np.arange(n) / n
    out = np.empty((m, nt, n, n))
    I_t, I_x, I_m = np.eye(nt), np.eye(n), np.eye(m)
    # derivative operators on the (t, x) grid, flattened t-major, then component
    ops = [sgn * np.kron(I_t, Dx), np.kron(Dt, I_x)]
    for ic, c in enumerate(x1):
        pts = np.stack(np.meshgrid(t, x1, indexing="ij"), -1).reshape(-1, 2)
        theta = np.column_stack([pts[:, 1], c - pts[:, 0] * frame.n[1]])
        C = evaluate_trig(coef, theta)
        B = np.einsum("ki,pklab,lj->pijab", M, C, M)  # (P, 2, 2, m, m)
        P = nt * n
        K = np.zeros((P * m, P * m))
        for a in range(2):
            for b in range(2):
                inner = np.einsum("pxy,pq->pxqy", B[:, a, b], ops[b]).reshape(P * m, P * m)
                K -= np.kron(ops[a], I_m) @ inner
        rhs = np.zeros(P * m)
        rows0 = np.arange(n * m)  # t = 0
        K[rows0] = 0
        K[rows0, rows0] = 1
        rhs[rows0] = phi[:, :, ic].T.ravel()
        rowsL = (nt - 1) * n * m + np.arange(n * m)
        K[rowsL] = np.kron(Dt[-1:], np.eye(n * m))
        rhs[rowsL] = 0
        sol = np.linalg.solve(K, rhs).reshape(nt, n, m)
        out[:, :, :, ic] = np.moveaxis(sol, 2, 0)
    return StripSolution(t, out, length)
