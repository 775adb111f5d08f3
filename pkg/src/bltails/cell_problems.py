"""Periodic cell problems on T^d.

Correctors chi_j^beta solve -div(A grad(chi_j^beta + y_j e^beta)) = 0 with zero
mean; the homogenized tensor averages A + A grad chi. Flux correctors use the
skew potential phi_{ij,k} = d_i f_{jk} - d_j f_{ik} with Laplace(f_{jk}) = b_{jk}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import krylov
from .errors import ConfigError, ConsistencyError, PreconditionError, SolverError, UsageError
from .periodic_fields import (
    GridField,
    TrigTensor,
    check_ellipticity,
    grid_axes,
    nyquist_mask,
    sample,
    wavenumbers,
)

__all__ = [
    "CorrectorSet",
    "HomogenizedTensor",
    "FluxCorrectorSet",
    "PeriodicOperator",
    "solve_correctors",
    "homogenized_tensor",
    "solve_flux_correctors",
    "directional_matrix",
]


@dataclass
class CorrectorSet:
    """chi[j, beta] is the R^m-valued corrector; values shape (d, m, m, N..N) as (j, beta, gamma)."""

    d: int
    m: int
    values: np.ndarray
    coeff_hash: str
    resolution: int
    residual: float
    iterations: list[int] = field(default_factory=list)

    def component(self, j: int, beta: int) -> GridField:
        return GridField(self.values[j, beta], self.d)

    def gradient(self) -> np.ndarray:
        """Spectral gradient with the derivative index last among components: (j, beta, gamma, ell, grid)."""
        return spectral_gradient(self.values, self.d)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "m": self.m,
            "coeff_hash": self.coeff_hash,
            "resolution": self.resolution,
            "residual": self.residual,
            "values": self.values.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CorrectorSet":
        return cls(
            int(obj["d"]),
            int(obj["m"]),
            np.asarray(obj["values"], dtype=float),
            str(obj["coeff_hash"]),
            int(obj["resolution"]),
            float(obj["residual"]),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str | Path) -> "CorrectorSet":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class HomogenizedTensor:
    values: np.ndarray
    coeff_hash: str = ""

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[2]

    def adjoint(self) -> "HomogenizedTensor":
        return HomogenizedTensor(np.transpose(self.values, (1, 0, 3, 2)), self.coeff_hash)

    def min_eigenvalue(self) -> float:
        d, m = self.d, self.m
        q = np.transpose(self.values, (2, 0, 3, 1)).reshape(m * d, m * d)
        return float(np.linalg.eigvalsh(0.5 * (q + q.T))[0])


@dataclass
class FluxCorrectorSet:
    """phi[i, j, k, alpha, beta] on the grid; antisymmetric in (i, j) by construction."""

    d: int
    m: int
    values: np.ndarray
    coeff_hash: str
    resolution: int
    divergence_residual: float
    antisymmetry_residual: float


def spectral_gradient(values: np.ndarray, d: int) -> np.ndarray:
    n = values.shape[-1]
    hat = np.fft.rfftn(values, axes=grid_axes(d))
    ks = wavenumbers(n, d, real=True)
    out = np.stack(
        [np.fft.irfftn(2j * np.pi * k * hat, s=(n,) * d, axes=grid_axes(d)) for k in ks],
        axis=values.ndim - d,
    )
    return out


class PeriodicOperator:
    """Matrix-free u -> -div(A grad u) on R^m-valued grid functions.

    Constants and Nyquist modes are mapped to themselves, which makes the
    discrete operator invertible on the whole grid space while leaving the
    mean-zero, Nyquist-free subspace untouched.
    """

    def __init__(self, A: TrigTensor, resolution: int):
        self.A = A
        self.d, self.m, self.n = A.d, A.m, resolution
        self.a = sample(A, resolution).values  # (i, j, alpha, beta, grid)
        self.shape = (self.m,) + (self.n,) * self.d
        self.ks = wavenumbers(self.n, self.d, real=True)
        shape = (self.n,) * (self.d - 1) + (self.n // 2 + 1,)
        zero = np.zeros(shape, dtype=bool)
        zero[(0,) * self.d] = True
        self.frozen = zero | nyquist_mask(self.n, self.d)
        abar = A.mean_value()
        kk = np.stack([np.broadcast_to(k, shape) for k in self.ks])  # (d, shape)
        sym = 4 * np.pi**2 * np.einsum("i...,ijab,j...->...ab", kk, abar, kk)
        sym[self.frozen] = np.eye(self.m)
        self._pinv = np.linalg.inv(sym)

    def _div_flux(self, flux: np.ndarray) -> np.ndarray:
        """Fourier transform of -div F (i.e. D^T F) for flux (d, m, grid)."""
        fh = np.fft.rfftn(flux, axes=grid_axes(self.d))
        return sum(-2j * np.pi * k * fh[i] for i, k in enumerate(self.ks))

    def apply_hat(self, u: np.ndarray) -> np.ndarray:
        d = self.d
        uh = np.fft.rfftn(u, axes=grid_axes(d))
        grad = np.stack(
            [np.fft.irfftn(2j * np.pi * k * uh, s=(self.n,) * d, axes=grid_axes(d)) for k in self.ks]
        )  # (ell, beta, grid)
        flux = np.einsum("ijab...,jb...->ia...", self.a, grad)
        rh = self._div_flux(flux)
        rh = np.where(self.frozen, uh, rh)
        return rh

    def apply(self, x: np.ndarray) -> np.ndarray:
        u = x.reshape(self.shape)
        rh = self.apply_hat(u)
        return np.fft.irfftn(rh, s=(self.n,) * self.d, axes=grid_axes(self.d)).ravel()

    def precondition(self, r: np.ndarray) -> np.ndarray:
        rh = np.fft.rfftn(r.reshape(self.shape), axes=grid_axes(self.d))
        zh = np.einsum("...ab,b...->a...", self._pinv, rh)
        return np.fft.irfftn(zh, s=(self.n,) * self.d, axes=grid_axes(self.d)).ravel()

    def rhs_from_flux(self, flux: np.ndarray) -> np.ndarray:
        """Grid vector of div F (weak right-hand side of -div(A grad u) = div F) with frozen modes removed."""
        fh = self._div_flux(flux)  # equals D^T F = -div F in Fourier
        bh = np.where(self.frozen, 0.0, -fh)
        return np.fft.irfftn(bh, s=(self.n,) * self.d, axes=grid_axes(self.d)).ravel()

    def residual(self, u: np.ndarray, b: np.ndarray) -> float:
        r = self.apply(u.ravel()) - b.ravel()
        bn = np.linalg.norm(b)
        return float(np.linalg.norm(r) / bn) if bn > 0 else float(np.linalg.norm(r))

    def solve(self, b: np.ndarray, tol: float, maxiter: int) -> krylov.KrylovResult:
        return krylov.solve(
            self.apply, b.ravel(), self.precondition, self.A.is_symmetric(), tol=tol, maxiter=maxiter
        )


def _require_elliptic(A: TrigTensor, resolution: int) -> None:
    if A.lam > 0:
        rep = check_ellipticity(A, A.lam, resolution)
        if not rep.passed:
            raise PreconditionError(
                f"coefficients fail the ellipticity bound: lambda_min={rep.lambda_min:.4g} "
                f"< declared {A.lam:g} at {rep.violation_point}",
                hypothesis="uniform ellipticity of the coefficients",
            )


def solve_correctors(
    A: TrigTensor, resolution: int, tol: float = krylov.DEFAULT_TOL, maxiter: int = krylov.DEFAULT_MAXITER
) -> CorrectorSet:
    _require_elliptic(A, resolution)
    op = PeriodicOperator(A, resolution)
    d, m = A.d, A.m
    vals = np.zeros((d, m, m) + (resolution,) * d)
    worst, iters = 0.0, []
    if not A.is_constant():
        for j in range(d):
            for beta in range(m):
                # flux of the affine part: A grad(y_j e^beta) = a_{. j}^{. beta}
                flux = op.a[:, j, :, beta]
                b = op.rhs_from_flux(flux)
                try:
                    res = op.solve(b, tol, maxiter)
                except SolverError as exc:
                    raise SolverError(f"corrector (j={j}, beta={beta}): {exc}", exc.residuals) from None
                vals[j, beta] = res.x.reshape((m,) + (resolution,) * d)
                worst = max(worst, op.residual(res.x, b))
                iters.append(res.iterations)
    vals -= vals.mean(axis=grid_axes(d), keepdims=True)
    return CorrectorSet(d, m, vals, A.digest(), resolution, worst, iters)


def homogenized_tensor(A: TrigTensor, chi: CorrectorSet) -> HomogenizedTensor:
    if chi.coeff_hash != A.digest():
        raise UsageError("corrector set was computed for different coefficients")
    if A.is_constant():
        # grid averaging of a constant is not exact in floating point
        return HomogenizedTensor(A.mean_value(), A.digest())
    a = sample(A, chi.resolution).values
    grad = chi.gradient()  # (j, beta, gamma, k, grid)
    integrand = a + np.einsum("ikag...,jbgk...->ijab...", a, grad)
    return HomogenizedTensor(integrand.mean(axis=grid_axes(A.d)), A.digest())


def solve_flux_correctors(
    Astar: TrigTensor,
    chistar: CorrectorSet,
    resolution: int | None = None,
    tol: float = krylov.DEFAULT_TOL,
    ahat_star: HomogenizedTensor | None = None,
) -> FluxCorrectorSet:
    """Skew flux correctors of A* from its correctors chi*.

    ``ahat_star`` may be supplied to check an externally computed homogenized
    tensor; the zero-mean test on the flux right-hand side then catches a
    mismatch.
    """
    if chistar.coeff_hash != Astar.digest():
        raise UsageError("corrector set was computed for different coefficients")
    n = chistar.resolution if resolution is None else resolution
    if n != chistar.resolution:
        raise UsageError("flux correctors must use the corrector resolution")
    d, m = Astar.d, Astar.m
    a = sample(Astar, n).values
    grad = chistar.gradient()
    ahat = (ahat_star or homogenized_tensor(Astar, chistar)).values
    # b_{jk}^{ab} = a*_{jk}^{ab} + a*_{jl}^{ag} d_l chi*_k^{gb} - ahat*_{jk}^{ab}
    b = a + np.einsum("jlag...,kbgl...->jkab...", a, grad) - ahat[(...,) + (None,) * d]
    bmean = np.abs(b.mean(axis=grid_axes(d))).max()
    if bmean > 1e-8:
        raise ConsistencyError(f"flux right-hand side has mean {bmean:.3e}; homogenized tensor inconsistent")
    ks = wavenumbers(n, d, real=True)
    k2 = sum(k**2 for k in ks)
    singular = k2 == 0
    lap = np.where(singular, 1.0, -4 * np.pi**2 * k2)
    bh = np.fft.rfftn(b, axes=grid_axes(d))
    fh = np.where(singular, 0.0, bh / lap)
    # phi_{ij,k} = d_i f_{jk} - d_j f_{ik}
    dfh = np.stack([2j * np.pi * k * fh for k in ks])  # (i, j, k, a, b, shape)
    phih = dfh - np.swapaxes(dfh, 0, 1)
    phi = np.fft.irfftn(phih, s=(n,) * d, axes=grid_axes(d))
    antisym = float(np.abs(phi + np.swapaxes(phi, 0, 1)).max())
    # divergence identity d_i phi_{ij,k} = b_{jk}
    div = np.fft.irfftn(
        sum(2j * np.pi * k * phih[i] for i, k in enumerate(ks)), s=(n,) * d, axes=grid_axes(d)
    )
    bnorm = max(float(np.sqrt((b**2).mean())), 1.0)
    div_res = float(np.sqrt(((div - b) ** 2).mean()) / bnorm)
    return FluxCorrectorSet(d, m, phi, Astar.digest(), n, div_res, antisym)


def directional_matrix(Ahat_star: HomogenizedTensor | np.ndarray, n) -> np.ndarray:
    """h = (ahat*_{ij} n_i n_j)^{-1} as an m x m matrix."""
    vals = Ahat_star.values if isinstance(Ahat_star, HomogenizedTensor) else np.asarray(Ahat_star)
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1) > 1e-10:
        raise ConfigError("direction must be a unit vector", field="n")
    c = np.einsum("ijab,i,j->ab", vals, n, n)
    cond = np.linalg.cond(c)
    if not np.isfinite(cond) or cond > 1e12:
        raise ConsistencyError(f"contracted homogenized matrix is ill-conditioned (cond={cond:.3e})")
    return np.linalg.inv(c)
