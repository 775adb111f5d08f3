"""Unit normals, orthogonal frames, Diophantine constants and ellipsoid samples."""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, PoleError

__all__ = [
    "Frame",
    "DiophantineReport",
    "ConvexSurface",
    "KappaStatistics",
    "build_frame",
    "kappa",
    "sample_boundary",
    "kappa_statistics",
    "unit",
]

POLE_TOL = 1e-8
# lattice boxes larger than this many points are refused
MAX_LATTICE_POINTS = 3 * 10**7


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ConfigError("zero vector has no direction")
    return v / nrm


@dataclass(frozen=True)
class Frame:
    """Orthogonal M = (N, -n); N spans the tangent space of n."""

    n: np.ndarray
    N: np.ndarray
    branch: int

    @property
    def d(self) -> int:
        return self.n.size

    @property
    def M(self) -> np.ndarray:
        return np.column_stack([self.N, -self.n])

    def tangential(self, k: np.ndarray) -> np.ndarray:
        """Components N^T k of lattice vectors stacked along the last axis."""
        return np.asarray(k, dtype=float) @ self.N


def _reflection(v: np.ndarray) -> np.ndarray:
    return np.eye(v.size) - 2.0 * np.outer(v, v) / (v @ v)


def build_frame(n, branch: int | None = None) -> Frame:
    """Householder frame for the unit normal n.

    Branch 0 reflects along e_d + n (pole at n = -e_d); branch 1 reflects along
    e_d - n and flips the last column (pole at n = e_d). Without an explicit
    branch, the hemisphere n_d >= 0 uses branch 0 and the rest branch 1, so
    nearby normals in one hemisphere get nearby frames (|dN| <= 2|dn|).
    """
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ConfigError("normal must have unit length", field="n")
    d = n.size
    if d < 2:
        raise ConfigError("normal must have dimension >= 2", field="n")
    ed = np.zeros(d)
    ed[-1] = 1.0
    if branch is None:
        branch = 0 if n[-1] >= 0 else 1
    if branch == 0:
        v = ed + n
        if np.linalg.norm(v) < POLE_TOL:
            raise PoleError("normal at the pole -e_d of branch 0; use branch=1")
        H = _reflection(v)
    elif branch == 1:
        v = ed - n
        if np.linalg.norm(v) < POLE_TOL:
            raise PoleError("normal at the pole e_d of branch 1; use branch=0")
        H = _reflection(v)
    else:
        raise ConfigError(f"unknown frame branch {branch}", field="branch")
    N = H[:, : d - 1].copy()
    return Frame(n.copy(), N, branch)


@dataclass(frozen=True)
class DiophantineReport:
    """Box-truncated Diophantine constant.

    ``kappa_hat`` minimizes |(I - n n^T) xi| |xi|^2 over 0 < |xi|_inf <= cutoff;
    it is an upper bound of the constant over all of Z^d.
    """

    n: np.ndarray
    cutoff: int
    kappa_hat: float
    argmin: tuple[int, ...]
    classification: str

    @property
    def rational(self) -> bool:
        return self.classification == "rational-detected"

    def to_json(self) -> dict:
        return {
            "n": self.n.tolist(),
            "cutoff": self.cutoff,
            "kappa_hat": self.kappa_hat,
            "argmin": list(self.argmin),
            "classification": self.classification,
            "truncation": "minimum over the lattice box |xi|_inf <= cutoff only",
        }


def _half_box(d: int, cutoff: int, first: int) -> np.ndarray:
    """Lattice points with xi_1 = first and the rest of the box, keeping one of +-xi."""
    rng = np.arange(-cutoff, cutoff + 1)
    rest = np.stack(np.meshgrid(*([rng] * (d - 1)), indexing="ij"), -1).reshape(-1, d - 1)
    if first == 0:
        # keep lexicographically positive tails only
        nz = rest != 0
        lead = np.where(nz.any(1), rest[np.arange(len(rest)), nz.argmax(1)], 0)
        rest = rest[lead > 0]
    pts = np.empty((len(rest), d), dtype=np.int64)
    pts[:, 0] = first
    pts[:, 1:] = rest
    return pts


def kappa(n, cutoff: int) -> DiophantineReport:
    """Exhaustive lattice search for the box Diophantine constant."""
    n = np.asarray(n, dtype=float)
    d = n.size
    if cutoff < 1:
        raise ConfigError("cutoff must be >= 1", field="cutoff")
    if (2 * cutoff + 1) ** d > MAX_LATTICE_POINTS:
        raise ConfigError(
            f"cutoff {cutoff} in d={d} exceeds the lattice budget of {MAX_LATTICE_POINTS} points",
            field="cutoff",
        )
    best = np.inf
    arg: tuple[int, ...] = ()
    for first in range(0, cutoff + 1):
        xi = _half_box(d, cutoff, first).astype(float)
        if xi.size == 0:
            continue
        proj = xi - np.outer(xi @ n, n)
        val = np.linalg.norm(proj, axis=1) * np.einsum("ij,ij->i", xi, xi)
        i = int(np.argmin(val))
        if val[i] < best:
            best = float(val[i])
            arg = tuple(int(v) for v in xi[i])
    # projections of exact multiples of n are round-off sized
    if best < 1e-12:
        best = 0.0
    tag = "rational-detected" if best == 0.0 else "irrational-presumed"
    return DiophantineReport(n.copy(), int(cutoff), best, arg, tag)


def kappa_many(normals: np.ndarray, cutoff: int) -> np.ndarray:
    """kappa_hat for a stack of normals, vectorized over the lattice box."""
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    d = normals.shape[1]
    if (2 * cutoff + 1) ** d > MAX_LATTICE_POINTS:
        raise ConfigError(f"cutoff {cutoff} too large for d={d}", field="cutoff")
    best = np.full(len(normals), np.inf)
    chunk = max(1, 4_000_000 // max(1, (2 * cutoff + 1) ** (d - 1)))
    for first in range(0, cutoff + 1):
        xi = _half_box(d, cutoff, first).astype(float)
        if xi.size == 0:
            continue
        sq = np.einsum("ij,ij->i", xi, xi)
        for s in range(0, len(normals), chunk):
            nn = normals[s : s + chunk]
            # Lagrange identity: no cancellation when xi is nearly parallel to n
            perp2 = np.zeros((len(xi), len(nn)))
            for i, j in itertools.combinations(range(d), 2):
                perp2 += (np.outer(xi[:, i], nn[:, j]) - np.outer(xi[:, j], nn[:, i])) ** 2
            val = np.sqrt(perp2) * sq[:, None]
            best[s : s + chunk] = np.minimum(best[s : s + chunk], val.min(axis=0))
    best[best < 1e-12] = 0.0
    return best


@dataclass
class ConvexSurface:
    semi_axes: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    def to_csv(self, path: str | Path) -> None:
        d = self.d
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i+1}" for i in range(d)] + [f"n{i+1}" for i in range(d)] + ["weight"])
            for x, nv, wt in zip(self.points, self.normals, self.weights):
                w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in nv] + [repr(float(wt))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "ConvexSurface":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        d = (rows.shape[1] - 1) // 2
        pts, nrm = rows[:, :d], rows[:, d : 2 * d]
        ax = np.abs(pts).max(axis=0)
        return cls(ax, pts, nrm, rows[:, -1])


def _sphere_points(d: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Quasi-uniform unit-sphere points with equal-area weights."""
    if d == 2:
        ang = 2 * np.pi * (np.arange(count) + 0.5) / count
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
        return pts, np.full(count, 2 * np.pi / count)
    if d == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = np.pi * (1 + 5**0.5) * i
        r = np.sqrt(1 - z**2)
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        return pts, np.full(count, 4 * np.pi / count)
    raise ConfigError("surface sampling implemented for d = 2, 3 only")


def sample_boundary(semi_axes, count: int) -> ConvexSurface:
    """Ellipsoid x = diag(a) s for s on the unit sphere.

    The area element picks up det(diag(a)) |diag(a)^{-1} s| from the linear map;
    outward normals are proportional to x_i / a_i^2.
    """
    a = np.asarray(semi_axes, dtype=float)
    if np.any(a <= 0):
        raise ConfigError("semi-axes must be positive", field="semi_axes")
    if count < 10:
        raise ConfigError("count must be >= 10", field="count")
    s, w = _sphere_points(a.size, count)
    x = s * a
    g = s / a
    jac = np.prod(a) * np.linalg.norm(g, axis=1)
    normals = g / np.linalg.norm(g, axis=1, keepdims=True)
    return ConvexSurface(a, x, normals, w * jac)


@dataclass(frozen=True)
class KappaStatistics:
    value: float
    q: float
    cutoff: int
    rational_hits: int
    total: int
    warning: bool

    def to_json(self) -> dict:
        return self.__dict__.copy()


def kappa_statistics(surface: ConvexSurface, cutoff: int, q: float, kappas: np.ndarray | None = None) -> KappaStatistics:
    """Quadrature of kappa_hat(n(x))^{-q} over the surface, rational hits excluded."""
    if q < 0:
        raise ConfigError("q must be >= 0", field="q")
    if kappas is None:
        kappas = kappa_many(surface.normals, cutoff)
    hits = kappas == 0
    if q == 0:
        val = float(surface.weights.sum())
    else:
        val = float(np.sum(surface.weights[~hits] * kappas[~hits] ** (-q)))
    warn = hits.sum() > 0.01 * len(kappas)
    if warn:
        warnings.warn(f"{int(hits.sum())} of {len(kappas)} normals rational-detected at cutoff {cutoff}")
    return KappaStatistics(val, float(q), int(cutoff), int(hits.sum()), len(kappas), bool(warn))


def great_circle_perturb(n: np.ndarray, delta: float, direction: np.ndarray) -> np.ndarray:
    """Point at chord distance delta from n along the great circle towards direction."""
    t = direction - (direction @ n) * n
    t = unit(t)
    ang = 2 * np.arcsin(delta / 2)
    return np.cos(ang) * n + np.sin(ang) * t
