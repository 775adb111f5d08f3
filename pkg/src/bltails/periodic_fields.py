"""Smooth 1-periodic tensor fields on the torus T^d.

Coefficients are finite trigonometric polynomials stored as a map from lattice
vectors to complex ``(d, d, m, m)`` blocks in index order ``(i, j, alpha, beta)``.
Sampled fields live on uniform power-of-two grids with the component axes first
and the ``d`` grid axes last, so every transform runs over ``axes=(-d, ..., -1)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError

__all__ = [
    "TrigTensor",
    "GridField",
    "EllipticityReport",
    "grid_axes",
    "wavenumbers",
    "sample",
    "to_coefficients",
    "gradient",
    "mean",
    "shifted_sample",
    "check_ellipticity",
    "load_trig_tensor",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TrigTensor:
    """Real trigonometric polynomial with values in (d, d, m, m) tensors.

    ``coeffs`` maps integer tuples ``k`` to complex arrays. Missing Hermitian
    mirrors are completed on construction so the field is real-valued.
    """

    d: int
    m: int
    coeffs: Mapping[tuple[int, ...], np.ndarray]
    lam: float = 0.0

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ConfigError("dimension d must be >= 2")
        if self.m < 1:
            raise ConfigError("system size m must be >= 1")
        shape = (self.d, self.d, self.m, self.m)
        full: dict[tuple[int, ...], np.ndarray] = {}
        for k, c in self.coeffs.items():
            k = tuple(int(v) for v in k)
            if len(k) != self.d:
                raise ConfigError(f"lattice vector {k} has wrong length for d={self.d}")
            c = np.asarray(c, dtype=complex)
            if c.shape != shape:
                raise ConfigError(f"coefficient at k={k} has shape {c.shape}, expected {shape}")
            full[k] = full.get(k, 0) + c
        for k in list(full):
            mk = tuple(-v for v in k)
            if mk not in full:
                full[mk] = np.conj(full[k])
            elif not np.allclose(full[mk], np.conj(full[k]), atol=1e-14, rtol=0):
                raise ConfigError(f"coefficients at k={k} and -k are not Hermitian mirrors")
        zero = (0,) * self.d
        if zero in full:
            full[zero] = full[zero].real.astype(complex)
        object.__setattr__(self, "coeffs", dict(sorted(full.items())))

    @property
    def bandwidth(self) -> int:
        if not self.coeffs:
            return 0
        return max(max(abs(v) for v in k) for k in self.coeffs)

    @property
    def min_resolution(self) -> int:
        return 2 * self.bandwidth + 2

    def adjoint(self) -> "TrigTensor":
        """Coefficients of A* with a*_{ij}^{ab} = a_{ji}^{ba}."""
        return TrigTensor(
            self.d,
            self.m,
            {k: np.transpose(c, (1, 0, 3, 2)) for k, c in self.coeffs.items()},
            self.lam,
        )

    def mean_value(self) -> np.ndarray:
        return self.coeffs.get((0,) * self.d, np.zeros((self.d,) * 2 + (self.m,) * 2)).real.copy()

    def is_symmetric(self, tol: float = 1e-14) -> bool:
        adj = self.adjoint().coeffs
        return all(np.allclose(c, adj[k], atol=tol, rtol=0) for k, c in self.coeffs.items())

    def is_constant(self) -> bool:
        zero = (0,) * self.d
        return all(k == zero or not np.any(c) for k, c in self.coeffs.items())

    def scaled(self, s: float) -> "TrigTensor":
        return TrigTensor(self.d, self.m, {k: s * c for k, c in self.coeffs.items()}, self.lam)

    def digest(self) -> str:
        """Stable content hash used to tie correctors and caches to coefficients."""
        h = hashlib.sha256()
        h.update(f"{self.d},{self.m}".encode())
        for k, c in self.coeffs.items():
            h.update(repr(k).encode())
            h.update(np.ascontiguousarray(np.round(c, 15)).tobytes())
        return h.hexdigest()[:16]

    def to_json(self) -> dict:
        half = {}
        for k, c in self.coeffs.items():
            mk = tuple(-v for v in k)
            if mk in half:
                continue
            half[k] = c
        return {
            "d": self.d,
            "m": self.m,
            "lambda": self.lam,
            "coeffs": [
                {"k": list(k), "re": c.real.tolist(), "im": c.imag.tolist()}
                for k, c in half.items()
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrigTensor":
        try:
            d, m = int(obj["d"]), int(obj["m"])
            lam = float(obj.get("lambda", 0.0))
            coeffs = {}
            for i, entry in enumerate(obj["coeffs"]):
                re = np.asarray(entry["re"], dtype=float)
                im = np.asarray(entry.get("im", np.zeros_like(re)), dtype=float)
                k = tuple(int(v) for v in entry["k"])
                if k in coeffs:
                    raise ConfigError(f"coeffs[{i}].k: duplicate lattice vector {k}")
                coeffs[k] = re + 1j * im
        except KeyError as exc:
            raise ConfigError(f"coefficient file: missing field {exc.args[0]!r}") from None
        return cls(d, m, coeffs, lam)

    @classmethod
    def constant(cls, c: np.ndarray, lam: float = 0.0) -> "TrigTensor":
        c = np.asarray(c, dtype=float)
        d, m = c.shape[0], c.shape[2]
        return cls(d, m, {(0,) * d: c.astype(complex)}, lam)

    @classmethod
    def identity(cls, d: int, m: int = 1) -> "TrigTensor":
        c = np.einsum("ij,ab->ijab", np.eye(d), np.eye(m))
        return cls.constant(c, lam=1.0)


@dataclass
class GridField:
    """Samples of a periodic field on the uniform grid j/N, component axes first."""

    values: np.ndarray
    d: int

    @property
    def resolution(self) -> int:
        return self.values.shape[-1]

    @property
    def component_shape(self) -> tuple[int, ...]:
        return self.values.shape[: self.values.ndim - self.d]

    def __post_init__(self) -> None:
        grid = self.values.shape[self.values.ndim - self.d :]
        if len(grid) != self.d or len(set(grid)) != 1:
            raise ConfigError(f"grid axes {grid} are not a uniform {self.d}-dimensional grid")
        if not _is_power_of_two(grid[0]):
            raise ConfigError(f"grid resolution {grid[0]} is not a power of two")

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(self.values + other.values, self.d)

    def __mul__(self, s: float) -> "GridField":
        return GridField(self.values * s, self.d)

    __rmul__ = __mul__


@dataclass(frozen=True)
class EllipticityReport:
    lambda_min: float
    lambda_max: float
    lambda_declared: float
    passed: bool
    violation_point: tuple[float, ...] | None = None
    tolerance: float = 1e-10


def grid_axes(d: int) -> tuple[int, ...]:
    return tuple(range(-d, 0))


def wavenumbers(resolution: int, d: int, real: bool = False, drop_nyquist: bool = True) -> list[np.ndarray]:
    """Broadcastable integer wavenumber arrays for a (r)fftn over the last d axes.

    With ``drop_nyquist`` the -N/2 mode is set to 0, which keeps spectral
    derivatives skew-symmetric and real-valued.
    """
    n = resolution
    ks = []
    for ax in range(d):
        if real and ax == d - 1:
            k = np.fft.rfftfreq(n, 1.0 / n)
        else:
            k = np.fft.fftfreq(n, 1.0 / n)
        if drop_nyquist:
            k = np.where(np.abs(k) == n // 2, 0.0, k)
        shape = [1] * d
        shape[ax] = k.size
        ks.append(k.reshape(shape))
    return ks


def nyquist_mask(resolution: int, d: int) -> np.ndarray:
    """Boolean mask over rfftn modes that touch a Nyquist frequency on any axis."""
    n = resolution
    mask = np.zeros((n,) * (d - 1) + (n // 2 + 1,), dtype=bool)
    for ax, k in enumerate(wavenumbers(n, d, real=True, drop_nyquist=False)):
        mask |= np.broadcast_to(np.abs(k) == n // 2, mask.shape)
    return mask


def _check_resolution(trig: TrigTensor, resolution: int) -> None:
    if not _is_power_of_two(resolution):
        raise ConfigError(f"resolution {resolution} is not a power of two")
    if resolution < trig.min_resolution:
        raise ConfigError(
            f"resolution {resolution} below anti-aliasing bound {trig.min_resolution} "
            f"for bandwidth {trig.bandwidth}"
        )


def _coefficient_grid(trig: TrigTensor, resolution: int, phase: np.ndarray | None = None) -> np.ndarray:
    """Dense FFT-ordered coefficient array of shape (d, d, m, m, N, ..., N)."""
    n = resolution
    out = np.zeros((trig.d, trig.d, trig.m, trig.m) + (n,) * trig.d, dtype=complex)
    for k, c in trig.coeffs.items():
        idx = tuple(v % n for v in k)
        out[(Ellipsis,) + idx] = c
    return out


def sample(trig: TrigTensor, resolution: int) -> GridField:
    _check_resolution(trig, resolution)
    n, d = resolution, trig.d
    if trig.is_constant():
        # skip the transform so constant tensors are reproduced bit for bit
        c = trig.mean_value()
        return GridField(np.broadcast_to(c[(...,) + (None,) * d], c.shape + (n,) * d).copy(), d)
    grid = _coefficient_grid(trig, n)
    vals = np.fft.ifftn(grid, axes=grid_axes(d)) * n**d
    return GridField(vals.real.copy(), d)


def to_coefficients(field: GridField) -> np.ndarray:
    """FFT-ordered Fourier coefficients c_k with field = sum_k c_k e^{2 pi i k.theta}."""
    d, n = field.d, field.resolution
    return np.fft.fftn(field.values, axes=grid_axes(d)) / n**d


def gradient(field: GridField) -> GridField:
    """Spectral gradient; the new length-d index is appended after the components."""
    d, n = field.d, field.resolution
    hat = np.fft.rfftn(field.values, axes=grid_axes(d))
    ks = wavenumbers(n, d, real=True)
    comps = field.values.shape[: field.values.ndim - d]
    out = np.empty(comps + (d,) + (n,) * d)
    for ell, k in enumerate(ks):
        out[(Ellipsis, ell) + (slice(None),) * d] = np.fft.irfftn(
            2j * np.pi * k * hat, s=(n,) * d, axes=grid_axes(d)
        )
    return GridField(out, d)


def mean(field: GridField) -> np.ndarray:
    return field.values.mean(axis=grid_axes(field.d))


def shifted_sample(trig: TrigTensor, frame, resolution: int, t_nodes: Sequence[float]) -> np.ndarray:
    """B(theta, t) = M^T A(theta - t n) M on the grid for every t node.

    Returns an array of shape (len(t_nodes), d, d, m, m, N, ..., N). The shift
    is applied as the phase factor exp(-2 pi i k.n t) on each Fourier mode, so
    irrational n incurs no interpolation error.
    """
    _check_resolution(trig, resolution)
    n_res, d = resolution, trig.d
    t_nodes = np.asarray(t_nodes, dtype=float)
    if np.any(~np.isfinite(t_nodes)) or np.any(t_nodes < 0):
        raise ConfigError("t_nodes must be finite and nonnegative")
    M = frame.M
    keys = list(trig.coeffs)
    # rotate each coefficient once: M^T C M on the gradient indices
    rot = np.stack([np.einsum("ki,klab,lj->ijab", M, trig.coeffs[k], M) for k in keys])
    kvec = np.array(keys, dtype=float)
    kn = kvec @ frame.n
    out = np.empty((t_nodes.size, d, d, trig.m, trig.m) + (n_res,) * d)
    base = np.zeros((d, d, trig.m, trig.m) + (n_res,) * d, dtype=complex)
    idx = [tuple(v % n_res for v in k) for k in keys]
    for it, t in enumerate(t_nodes):
        base[...] = 0
        ph = np.exp(-2j * np.pi * kn * t)
        for q, ix in enumerate(idx):
            base[(Ellipsis,) + ix] = rot[q] * ph[q]
        out[it] = (np.fft.ifftn(base, axes=grid_axes(d)) * n_res**d).real
    return out


def check_ellipticity(trig: TrigTensor, lam: float, scan_resolution: int, tol: float = 1e-10) -> EllipticityReport:
    """Scan the symmetrized quadratic form xi -> a xi.xi over grid points."""
    field = sample(trig, scan_resolution).values
    d, m = trig.d, trig.m
    n = scan_resolution
    # quadratic form on xi in R^{m x d}: index pairs (alpha, i), (beta, j)
    q = np.moveaxis(field, (0, 1, 2, 3), (1, 3, 0, 2)).reshape((m * d, m * d, -1))
    q = 0.5 * (q + np.swapaxes(q, 0, 1))
    eig = np.linalg.eigvalsh(np.moveaxis(q, -1, 0))
    lo, hi = eig[:, 0], eig[:, -1]
    lam_min, lam_max = float(lo.min()), float(hi.max())
    ok_lo = lam_min >= lam - tol
    ok_hi = lam > 0 and lam_max <= 1.0 / lam + tol
    point = None
    if not (ok_lo and ok_hi):
        flat = int(np.argmin(lo)) if not ok_lo else int(np.argmax(hi))
        point = tuple(float(v) / n for v in np.unravel_index(flat, (n,) * d))
    return EllipticityReport(lam_min, lam_max, lam, bool(ok_lo and ok_hi), point, tol)


def load_trig_tensor(path: str | Path) -> TrigTensor:
    with open(path) as fh:
        return TrigTensor.from_json(json.load(fh))
