"""Graded spectral-element mesh in the depth variable t."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from ..errors import ConfigError
from ..krylov import DEFAULT_MAXITER, DEFAULT_TOL

CLOSURES = ("zero-neumann", "tail-dirichlet")


@lru_cache(maxsize=None)
def gll(p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Lobatto-Legendre nodes, weights and differentiation matrix on [-1, 1]."""
    if p < 1:
        raise ConfigError("element degree must be >= 1")
    cp = np.zeros(p + 1)
    cp[-1] = 1.0
    interior = legendre.legroots(legendre.legder(cp)) if p > 1 else np.array([])
    x = np.concatenate([[-1.0], np.sort(interior), [1.0]])
    Lp = legendre.legval(x, cp)
    w = 2.0 / (p * (p + 1) * Lp**2)
    D = np.zeros((p + 1, p + 1))
    for i in range(p + 1):
        for j in range(p + 1):
            if i != j:
                D[i, j] = Lp[i] / (Lp[j] * (x[i] - x[j]))
    D[0, 0] = -p * (p + 1) / 4.0
    D[p, p] = p * (p + 1) / 4.0
    return x, w, D


@dataclass(frozen=True)
class Discretization:
    """Resolution parameters for a lifted solve.

    The t-axis is split into elements of degree ``degree`` whose lengths start
    at ``h0`` (default ``1/n_theta``) and grow by ``growth`` up to ``h_max``.
    """

    n_theta: int
    T: float
    degree: int = 8
    h0: float | None = None
    growth: float = 1.5
    h_max: float = 2.0
    closure: str = "zero-neumann"
    tol: float = DEFAULT_TOL
    maxiter: int = DEFAULT_MAXITER

    def __post_init__(self) -> None:
        if self.n_theta < 4 or self.n_theta & (self.n_theta - 1):
            raise ConfigError(f"n_theta={self.n_theta} must be a power of two >= 4", field="n_theta")
        if not self.T > 0:
            raise ConfigError("T must be positive", field="T")
        if self.closure not in CLOSURES:
            raise ConfigError(f"closure must be one of {CLOSURES}", field="closure")
        if self.growth < 1 or self.h_max <= 0:
            raise ConfigError("growth must be >= 1 and h_max positive", field="growth")
        if not 0 < self.tol < 1:
            raise ConfigError("tol must lie in (0, 1)", field="tol")

    @property
    def first_step(self) -> float:
        return self.h0 if self.h0 is not None else 1.0 / self.n_theta

    def breakpoints(self) -> np.ndarray:
        h = min(self.first_step, self.T)
        pts = [0.0]
        while pts[-1] < self.T - 1e-12:
            nxt = pts[-1] + h
            if self.T - nxt < 0.5 * h:
                nxt = self.T
            pts.append(min(nxt, self.T))
            h = min(h * self.growth, self.h_max)
        return np.array(pts)

    def check_far_field(self, kappa_hat: float) -> None:
        need = 10.0 / max(kappa_hat, 0.1)
        if self.T < need:
            raise ConfigError(
                f"T={self.T:g} does not reach the far field 10/max(kappa_hat, 0.1)={need:.4g}", field="T"
            )

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]

    def to_json(self) -> dict:
        return asdict(self)


class TMesh:
    """Global GLL nodes and element-local quadrature for a Discretization."""

    def __init__(self, disc: Discretization):
        self.p = p = disc.degree
        self.breaks = disc.breakpoints()
        self.E = E = len(self.breaks) - 1
        self.h = np.diff(self.breaks)
        xr, wr, Dr = gll(p)
        self.xref, self.wref, self.Dref = xr, wr, Dr
        self.t_local = self.breaks[:-1, None] + 0.5 * (xr[None, :] + 1) * self.h[:, None]
        self.J = E * p + 1
        self.t = np.empty(self.J)
        self.t[:-1] = self.t_local[:, :p].ravel()
        self.t[-1] = self.breaks[-1]
        self.idx = np.arange(E)[:, None] * p + np.arange(p + 1)[None, :]
        self.w_local = 0.5 * self.h[:, None] * wr[None, :]
        self.scale = 2.0 / self.h  # d/dt = scale * d/dxi
        self.mass = self.assemble(self.w_local)

    @property
    def T(self) -> float:
        return float(self.breaks[-1])

    def gather(self, glob: np.ndarray, axis: int) -> np.ndarray:
        """Element-local copy (E, p+1) of a node axis."""
        return np.take(glob, self.idx, axis=axis)

    def assemble(self, loc: np.ndarray) -> np.ndarray:
        """Sum element-local values (E, p+1) onto the global nodes (J,)."""
        return self.assemble_axis(loc, 0)

    def assemble_axis(self, loc: np.ndarray, axis: int) -> np.ndarray:
        """Scatter-add along ``axis`` (element axis; the next axis holds the p+1 nodes)."""
        p, E = self.p, self.E
        loc = np.moveaxis(loc, (axis, axis + 1), (0, 1))
        rest = loc.shape[2:]
        out = np.zeros((self.J,) + rest, dtype=loc.dtype)
        out[:-1].reshape((E, p) + rest)[...] = loc[:, :p]
        out[p::p] += loc[:, p]
        return np.moveaxis(out, 0, axis)

    def derivative_local(self, loc: np.ndarray, axis: int) -> np.ndarray:
        """d/dt within each element; ``axis`` is the element axis, followed by the node axis."""
        x = np.moveaxis(loc, (axis, axis + 1), (-2, -1))
        dx = np.einsum("qr,...er->...eq", self.Dref, x) * self.scale[:, None]
        return np.moveaxis(dx, (-2, -1), (axis, axis + 1))

    def derivative_transpose_local(self, loc: np.ndarray, axis: int) -> np.ndarray:
        x = np.moveaxis(loc, (axis, axis + 1), (-2, -1))
        dx = np.einsum("qr,...eq->...er", self.Dref, x * self.scale[:, None])
        return np.moveaxis(dx, (-2, -1), (axis, axis + 1))

    def band_matrices(self) -> dict[str, np.ndarray]:
        """Global mass, stiffness and mixed matrices in band storage (J, 2p+1).

        ``mix[i, j] = w_i D_ij`` pairs an underived test function with a derived
        trial function; its transpose pairs the reverse.
        """
        p, J = self.p, self.J
        bw = p
        out = {k: np.zeros((J, 2 * bw + 1)) for k in ("mass", "stiff", "mix", "mixT")}
        for e in range(self.E):
            D = self.Dref * self.scale[e]
            w = self.w_local[e]
            S = D.T @ (w[:, None] * D)
            C = w[:, None] * D
            base = e * p
            for a in range(p + 1):
                i = base + a
                out["mass"][i, bw] += w[a]
                for b in range(p + 1):
                    j = base + b
                    out["stiff"][i, bw + j - i] += S[a, b]
                    out["mix"][i, bw + j - i] += C[a, b]
                    out["mixT"][i, bw + j - i] += C[b, a]
        return out

    def interpolate(self, values: np.ndarray, t: float, axis: int = 0) -> np.ndarray:
        """Evaluate the element polynomial through the node values at depth t."""
        if t < 0 or t > self.T + 1e-12:
            raise ValueError("t outside mesh")
        e = int(np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.E - 1))
        xi = 2 * (t - self.breaks[e]) / self.h[e] - 1
        x = self.xref
        # barycentric Lagrange weights on GLL nodes
        bw = np.array([1.0 / np.prod([x[i] - x[j] for j in range(len(x)) if j != i]) for i in range(len(x))])
        diff = xi - x
        hit = np.isclose(diff, 0.0, atol=1e-15)
        if hit.any():
            lag = hit.astype(float)
        else:
            tmp = bw / diff
            lag = tmp / tmp.sum()
        loc = np.take(values, self.idx[e], axis=axis)
        return np.tensordot(lag, np.moveaxis(loc, axis, 0), axes=(0, 0))
