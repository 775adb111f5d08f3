"""Matrix-free lifted operator on T^d x [0, T] and its constant-coefficient inverse.

Unknowns are stored as arrays ``(m, J, N, ..., N)``: component, t-node, theta
grid. The bilinear form is

    a(W, V) = sum_theta sum_q w_q  G_W(q) . B(q) G_V(q),   G = (N^T grad_theta, d/dt),

with element-local GLL quadrature in t. Constrained degrees of freedom (Dirichlet
nodes, Nyquist modes, closure constraints) are kept as identity rows in Fourier
space so that the constrained operator stays symmetric whenever B is.
"""

from __future__ import annotations

import numpy as np

from ..geometry import Frame
from ..periodic_fields import TrigTensor, grid_axes, nyquist_mask, shifted_sample, wavenumbers
from .banded import BatchedBandLU
from .mesh import Discretization, TMesh


class LiftedOperator:
    """K' = (I - P) K (I - P) + P for the frozen-mode projector P.

    ``coef`` is sampled as-is: B(theta, t) = M^T coef(theta - t n) M. ``frozen``
    marks constrained (node, rfft mode) pairs. With ``pin`` the rank-one term
    pin * X_hat[k=0, node 0] is added, which fixes the additive constant of a
    pure Neumann problem at zero theta-mean on t = 0.
    """

    def __init__(
        self,
        coef: TrigTensor,
        frame: Frame,
        disc: Discretization,
        frozen: np.ndarray,
        pin: float | None = None,
    ):
        self.coef, self.frame, self.disc = coef, frame, disc
        self.d, self.m, self.N = coef.d, coef.m, disc.n_theta
        self.mesh = mesh = TMesh(disc)
        self.J = mesh.J
        d, n = self.d, self.N
        self.axes = grid_axes(d)
        self.grid = (n,) * d
        self.rshape = (n,) * (d - 1) + (n // 2 + 1,)
        self.frozen = np.broadcast_to(frozen, (self.J,) + self.rshape)
        self.free = ~self.frozen
        self.pin = pin
        ks = wavenumbers(n, d, real=True)
        kfull = np.stack(np.broadcast_arrays(*ks))  # (d, *rshape)
        # tangential symbols 2 pi (N^T k)_a, one per tangential direction
        self.tk = 2 * np.pi * np.einsum("ia,i...->a...", frame.N, kfull)
        M = frame.M
        self.Bbar = np.einsum("ki,klab,lj->ijab", M, coef.mean_value().real, M)
        self.constant = coef.is_constant()
        if self.constant:
            self.Bloc = None
        else:
            E, p = mesh.E, mesh.p
            B = shifted_sample(coef, frame, n, mesh.t_local.ravel())
            B = B.reshape((E, p + 1, d, d, self.m, self.m) + self.grid)
            self.Bloc = np.ascontiguousarray(np.moveaxis(B, (0, 1), (4, 5)))
        self.wq = mesh.w_local.reshape(mesh.w_local.shape + (1,) * d)
        self.symmetric = coef.is_symmetric()
        self._lu: BatchedBandLU | None = None

    @property
    def size(self) -> int:
        return self.m * self.J * self.N**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m, self.J) + self.grid

    def rfft(self, x: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(x, axes=self.axes)

    def irfft(self, xh: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(xh, s=self.grid, axes=self.axes)

    def lifted_gradient(self, xh: np.ndarray) -> np.ndarray:
        """Element-local lifted gradient (d, m, E, p+1, grid) of the field with rfft ``xh``."""
        d, mesh = self.d, self.mesh
        stack = np.concatenate([xh[None]] + [(1j * self.tk[a] * xh)[None] for a in range(d - 1)])
        real = self.irfft(stack)
        G = np.empty((d, self.m, mesh.E, mesh.p + 1) + self.grid)
        for a in range(d - 1):
            G[a] = mesh.gather(real[a + 1], axis=1)
        G[d - 1] = mesh.derivative_local(mesh.gather(real[0], axis=1), axis=1)
        return G

    def flux(self, G: np.ndarray) -> np.ndarray:
        if self.constant:
            return np.einsum("abxy,by...->ax...", self.Bbar, G)
        return np.einsum("abxy...,by...->ax...", self.Bloc, G)

    def divergence_hat(self, Fw: np.ndarray) -> np.ndarray:
        """Transpose of the weighted lifted gradient applied to element-local Fw, in rfft space."""
        d, mesh = self.d, self.mesh
        parts = np.empty((d, self.m, self.J) + self.grid)
        for a in range(d - 1):
            parts[a] = mesh.assemble_axis(Fw[a], axis=1)
        parts[d - 1] = mesh.assemble_axis(mesh.derivative_transpose_local(Fw[d - 1], axis=1), axis=1)
        hat = self.rfft(parts)
        out = hat[d - 1]
        for a in range(d - 1):
            out = out - 1j * self.tk[a] * hat[a]
        return out

    def raw_hat(self, xh: np.ndarray) -> np.ndarray:
        """Unconstrained K in rfft space."""
        G = self.lifted_gradient(xh)
        return self.divergence_hat(self.flux(G) * self.wq)

    def apply_hat(self, xh: np.ndarray) -> np.ndarray:
        yh = self.raw_hat(np.where(self.free, xh, 0))
        yh = np.where(self.free, yh, xh)
        if self.pin is not None:
            yh[(slice(None), 0) + (0,) * self.d] += self.pin * xh[(slice(None), 0) + (0,) * self.d]
        return yh

    def apply(self, x: np.ndarray) -> np.ndarray:
        xh = self.rfft(x.reshape(self.shape))
        return self.irfft(self.apply_hat(xh)).ravel()

    # preconditioner

    def _band_system(self) -> tuple[np.ndarray, int]:
        d, m, J, p = self.d, self.m, self.J, self.mesh.p
        nm = int(np.prod(self.rshape))
        bw = p * m + m - 1
        T = self.mesh.band_matrices()
        Bb = self.Bbar
        tk = self.tk.reshape(d - 1, nm)
        tan = slice(0, d - 1)
        C0 = np.einsum("ak,abxy,bk->kxy", tk, Bb[tan, tan], tk).astype(complex)
        C1 = -1j * np.einsum("ak,axy->kxy", tk, Bb[tan, d - 1])
        C1t = 1j * np.einsum("bxy,bk->kxy", Bb[d - 1, tan], tk)
        C2 = Bb[d - 1, d - 1]
        n = J * m
        ab = np.zeros((nm, n, 2 * bw + 1), dtype=complex)
        nodes = np.arange(J)
        for o in range(-p, p + 1):
            ok = (nodes + o >= 0) & (nodes + o < J)
            i = nodes[ok]
            col = p + o
            mass, stiff = T["mass"][i, col], T["stiff"][i, col]
            mix, mixT = T["mix"][i, col], T["mixT"][i, col]
            for al in range(m):
                for be in range(m):
                    vals = (
                        C0[:, al, be, None] * mass
                        + C2[al, be] * stiff
                        + C1[:, al, be, None] * mix
                        + C1t[:, al, be, None] * mixT
                    )
                    ab[:, i * m + al, bw + o * m + be - al] += vals
        # frozen dofs: identity rows and columns
        fro = np.repeat(self.frozen.reshape(J, nm).T, m, axis=1)  # (nm, n)
        rows = np.arange(n)[:, None]
        cols = rows + np.arange(2 * bw + 1)[None, :] - bw
        valid = (cols >= 0) & (cols < n)
        colfro = np.where(valid[None], fro[:, np.clip(cols, 0, n - 1)], False)
        kill = fro[:, :, None] | colfro | ~valid[None]
        ab[kill] = 0
        diag = ab[:, :, bw]
        diag[fro] = 1.0
        ab[:, :, bw] = diag
        if self.pin is not None:
            ab[0, :m, bw] += self.pin
        return ab, bw

    def factor(self) -> BatchedBandLU:
        if self._lu is None:
            ab, bw = self._band_system()
            self._lu = BatchedBandLU(ab, bw, overwrite=True)
        return self._lu

    def precondition_hat(self, rh: np.ndarray) -> np.ndarray:
        lu = self.factor()
        m, J = self.m, self.J
        nm = int(np.prod(self.rshape))
        # (m, J, modes) -> (modes, J*m) with dof = node*m + alpha
        flat = rh.reshape(m, J, nm).transpose(2, 1, 0).reshape(nm, J * m)
        z = lu.solve(flat)
        return z.reshape(nm, J, m).transpose(2, 1, 0).reshape(rh.shape)

    def precondition(self, r: np.ndarray) -> np.ndarray:
        return self.irfft(self.precondition_hat(self.rfft(r.reshape(self.shape)))).ravel()


def frozen_mask(
    disc: Discretization, d: int, dirichlet: bool, closure: str | None = None
) -> np.ndarray:
    """Constrained (node, rfft mode) pairs for a lifted solve."""
    mesh_J = TMesh(disc).J
    n = disc.n_theta
    rshape = (n,) * (d - 1) + (n // 2 + 1,)
    fro = np.zeros((mesh_J,) + rshape, dtype=bool)
    fro |= nyquist_mask(n, d)[None]
    if dirichlet:
        fro[0] = True
    if (closure or disc.closure) == "tail-dirichlet":
        fro[-1] = True
        fro[(-1,) + (0,) * d] = False
    return fro
