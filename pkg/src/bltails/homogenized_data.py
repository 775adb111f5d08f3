"""Homogenized Dirichlet and Neumann boundary data and the boundary-layer tail map.

For a boundary point with Diophantine normal n the effective Dirichlet value is

    fbar^a = h^{ab} mean_theta [ delta^{gb} + d_l chi*_k^{gb} n_l n_k - d_t V_{n,k}^{gb}(theta, 0) n_k ]
                              a_{ij}^{gv} n_i n_j f^v(theta)

and the effective Neumann data is

    gbar_{jk}^g = n_i ahat_{ji}^{ag} h^{ab} T_{lr} . mean_theta [ e_k delta^{vb} + grad chi*_k^{vb}
                                                              + grad_theta U_{n,k}^{vb}(theta, 0) ] g_{lr}^v(theta)

with h = (ahat*_{ij} n_i n_j)^{-1} and T_{lr} = n_l e_r - n_r e_l. V_{n,k}^b are
Dirichlet layers with data -chi*_k^b; U_{n,k}^b are Neumann layers driven by
the flux correctors of A*.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .boundary_layers.layers import (
    DIOPHANTINE,
    LiftedSolution,
    TailEstimate,
    _resample,
    solve_corrector_dirichlet,
    solve_dirichlet_layer,
    solve_flux_neumann,
)
from .boundary_layers.mesh import Discretization
from .cache import DiskCache, make_key
from .cell_problems import (
    CorrectorSet,
    FluxCorrectorSet,
    HomogenizedTensor,
    directional_matrix,
    homogenized_tensor,
    solve_correctors,
    solve_flux_correctors,
    spectral_gradient,
)
from .errors import ConfigError, PreconditionError
from .geometry import DiophantineReport, Frame, build_frame, kappa
from .periodic_fields import GridField, TrigTensor, grid_axes, sample

log = logging.getLogger(__name__)


@dataclass
class CellData:
    """Everything the boundary-data formulas need from the cell problems of A."""

    A: TrigTensor
    chistar: CorrectorSet
    ahat: HomogenizedTensor
    ahat_star: HomogenizedTensor
    flux: FluxCorrectorSet | None = None

    @classmethod
    def compute(cls, A: TrigTensor, resolution: int, with_flux: bool = True, tol: float = 1e-10) -> "CellData":
        Astar = A.adjoint()
        chistar = solve_correctors(Astar, resolution, tol)
        ahat_star = homogenized_tensor(Astar, chistar)
        flux = solve_flux_correctors(Astar, chistar, ahat_star=ahat_star) if with_flux else None
        # homogenization commutes with the adjoint, so ahat needs no second cell solve
        return cls(A, chistar, ahat_star.adjoint(), ahat_star, flux)

    def to_arrays(self) -> dict:
        out = {
            "chistar": self.chistar.values,
            "chistar_meta": np.array([self.chistar.residual, self.chistar.resolution]),
            "ahat_star": self.ahat_star.values,
        }
        if self.flux is not None:
            out["flux"] = self.flux.values
            out["flux_meta"] = np.array([self.flux.divergence_residual, self.flux.antisymmetry_residual])
        return out

    @classmethod
    def from_arrays(cls, A: TrigTensor, arrays: dict) -> "CellData":
        h = A.adjoint().digest()
        res, n = arrays["chistar_meta"]
        chistar = CorrectorSet(A.d, A.m, np.array(arrays["chistar"]), h, int(n), float(res))
        ahat_star = HomogenizedTensor(np.array(arrays["ahat_star"]), h)
        flux = None
        if "flux" in arrays:
            dres, ares = arrays["flux_meta"]
            flux = FluxCorrectorSet(A.d, A.m, np.array(arrays["flux"]), h, int(n), float(dres), float(ares))
        return cls(A, chistar, ahat_star.adjoint(), ahat_star, flux)

    @classmethod
    def cached(
        cls, A: TrigTensor, resolution: int, with_flux: bool, tol: float, disk: DiskCache | None
    ) -> "CellData":
        if disk is None:
            return cls.compute(A, resolution, with_flux, tol)
        key = make_key(kind="cell", coeff=A.digest(), resolution=resolution, flux=with_flux, tol=tol)
        arrays = disk.get(key)
        if arrays is not None:
            return cls.from_arrays(A, arrays)
        cell = cls.compute(A, resolution, with_flux, tol)
        disk.put(key, cell.to_arrays())
        return cell


class LayerStore:
    """Lifted corrector and flux layers keyed by (A, n, frame branch, discretization, data).

    Solves are held in memory; with a DiskCache they are also replayed across runs.
    """

    def __init__(self, disk: DiskCache | None = None):
        self.disk = disk
        self.memory: dict[str, LiftedSolution] = {}

    def get(self, key_parts: dict, frame: Frame, disc: Discretization, solve) -> LiftedSolution:
        key = make_key(**key_parts)
        if key in self.memory:
            return self.memory[key]
        sol = None
        if self.disk is not None:
            arr = self.disk.get(key)
            if arr is not None:
                sol = LiftedSolution.from_arrays(arr, frame, disc)
        if sol is None:
            sol = solve()
            if self.disk is not None:
                self.disk.put(key, sol.to_arrays())
        self.memory[key] = sol
        return sol


@dataclass
class BoundaryDataSample:
    x: np.ndarray
    n: np.ndarray
    kappa_hat: float
    value: np.ndarray
    trusted: bool
    provenance: dict = field(default_factory=dict)

    def row(self) -> list:
        return [*map(float, self.x), *map(float, self.n), self.kappa_hat, *map(float, np.ravel(self.value)), int(self.trusted)]


def _diophantine(frame: Frame, disc: Discretization, report: DiophantineReport | None) -> DiophantineReport:
    rep = report or kappa(frame.n, max(1, disc.n_theta // 2))
    if rep.kappa_hat == 0:
        raise PreconditionError(
            f"normal {frame.n.tolist()} is rational-detected; homogenized data needs a Diophantine normal",
            hypothesis=DIOPHANTINE,
        )
    return rep


def _key(cell: CellData, frame: Frame, disc: Discretization, **extra) -> dict:
    return dict(coeff=cell.A.digest(), n=frame.n, branch=frame.branch, disc=disc.digest(), **extra)


def corrector_layers(
    cell: CellData, frame: Frame, disc: Discretization, store: LayerStore | None = None
) -> dict[tuple[int, int], LiftedSolution]:
    store = store or LayerStore()
    out = {}
    for k in range(cell.A.d):
        for beta in range(cell.A.m):
            out[k, beta] = store.get(
                _key(cell, frame, disc, data="corrector", k=k, beta=beta),
                frame,
                disc,
                lambda k=k, beta=beta: solve_corrector_dirichlet(cell.A, cell.chistar, frame, k, beta, disc),
            )
    return out


def flux_layers(
    cell: CellData, frame: Frame, disc: Discretization, store: LayerStore | None = None, report=None
) -> dict[tuple[int, int], LiftedSolution]:
    if cell.flux is None:
        raise ConfigError("cell data carries no flux correctors", field="flux")
    store = store or LayerStore()
    out = {}
    for k in range(cell.A.d):
        for beta in range(cell.A.m):
            out[k, beta] = store.get(
                _key(cell, frame, disc, data="flux", k=k, beta=beta),
                frame,
                disc,
                lambda k=k, beta=beta: solve_flux_neumann(cell.A, cell.flux, frame, k, beta, disc, kappa_report=report),
            )
    return out


def _slice(f, d: int, m: int, n: int, lead: tuple[int, ...] = ()) -> np.ndarray:
    vals = f.values if isinstance(f, GridField) else np.asarray(f, dtype=float)
    if m == 1 and vals.ndim == len(lead) + d:
        vals = np.expand_dims(vals, len(lead))
    if vals.shape[-1] != n:
        vals = _resample(vals, d, n)
    if vals.shape != lead + (m,) + (n,) * d:
        raise ConfigError(f"data slice has shape {vals.shape}, expected {lead + (m,) + (n,) * d}")
    return vals


def dirichlet_kernel(
    cell: CellData, frame: Frame, disc: Discretization, store: LayerStore | None = None, report=None
) -> tuple[np.ndarray, bool]:
    """W^{a v}(theta) with fbar^a = mean_theta W^{a v} f^v; also whether all tails were trusted."""
    _diophantine(frame, disc, report)
    A, n = cell.A, frame.n
    d, m, N = A.d, A.m, disc.n_theta
    layers = corrector_layers(cell, frame, disc, store)
    gchi = _resample(cell.chistar.gradient(), d, N)  # (k, beta, gamma, l, grid)
    dtv = np.stack([np.stack([layers[k, b].dt_trace() for b in range(m)]) for k in range(d)])  # (k, beta, gamma, grid)
    bracket = np.eye(m).reshape((m, m) + (1,) * d) + np.einsum("kbgl...,l,k->gb...", gchi, n, n)
    bracket = bracket - np.einsum("kbg...,k->gb...", dtv, n)
    ann = np.einsum("ijgv...,i,j->gv...", sample(A, N).values, n, n)
    h = directional_matrix(cell.ahat_star, n)
    W = np.einsum("ab,gb...,gv...->av...", h, bracket, ann)
    trusted = all(s.tail.trusted for s in layers.values())
    return W, trusted


def dirichlet_data(
    cell: CellData,
    f_slice,
    frame: Frame,
    disc: Discretization,
    store: LayerStore | None = None,
    report: DiophantineReport | None = None,
) -> tuple[np.ndarray, bool]:
    """fbar(x) in R^m for the slice theta -> f(x, theta) of shape (m, grid); returns (value, trusted)."""
    W, trusted = dirichlet_kernel(cell, frame, disc, store, report)
    f = _slice(f_slice, cell.A.d, cell.A.m, disc.n_theta)
    ax = grid_axes(cell.A.d)
    return np.einsum("av...,v...->av...", W, f).sum(axis=1).mean(axis=ax), trusted


def neumann_kernel(
    cell: CellData, frame: Frame, disc: Discretization, store: LayerStore | None = None, report=None
) -> tuple[np.ndarray, bool]:
    """Q[gamma, j, k, v, l, r](theta) with gbar_{jk}^gamma = mean_theta Q g_{lr}^v."""
    rep = _diophantine(frame, disc, report)
    A, n = cell.A, frame.n
    d, m, N = A.d, A.m, disc.n_theta
    layers = flux_layers(cell, frame, disc, store, rep if report is not None else None)
    gchi = _resample(cell.chistar.gradient(), d, N)  # (k, beta, nu, s, grid)
    gU = np.stack([np.stack([layers[k, b].theta_gradient(0) for b in range(m)]) for k in range(d)])  # (k, beta, nu, s, grid)
    ek = np.einsum("ks,vb->kbvs", np.eye(d), np.eye(m)).reshape((d, m, m, d) + (1,) * d)
    vec = ek + gchi + gU  # (k, beta, nu, s, grid)
    # T_{lr} . v = n_l v_r - n_r v_l
    Tv = np.einsum("l,kbvr...->kbvlr...", n, vec) - np.einsum("r,kbvl...->kbvlr...", n, vec)
    h = directional_matrix(cell.ahat_star, n)
    pref = np.einsum("i,jiag,ab->gjb", n, cell.ahat.values, h)  # (gamma, j, beta)
    Q = np.einsum("gjb,kbvlr...->gjkvlr...", pref, Tv)
    trusted = all(s.tail.trusted for s in layers.values())
    return Q, trusted


def neumann_data(
    cell: CellData,
    g_slice,
    frame: Frame,
    disc: Discretization,
    store: LayerStore | None = None,
    report: DiophantineReport | None = None,
) -> tuple[np.ndarray, bool]:
    """gbar(x) with index order (gamma, j, k) for g of shape (l, r, m, grid)."""
    d, m = cell.A.d, cell.A.m
    Q, trusted = neumann_kernel(cell, frame, disc, store, report)
    g = _slice(g_slice, d, m, disc.n_theta, lead=(d, d))
    prod = np.einsum("gjkvlr...,lrv...->gjk...", Q, g)
    return prod.mean(axis=grid_axes(d)), trusted


def tail_map(
    coef: TrigTensor, n, phi, disc: Discretization, frame: Frame | None = None, report=None
) -> TailEstimate:
    """Boundary-layer tail of the operator with coefficients ``coef`` as given.

    Passing A gives the tail of the A-problem; passing A* gives the adjoint one.
    """
    frame = frame or build_frame(np.asarray(n, dtype=float))
    _diophantine(frame, disc, report)
    return solve_dirichlet_layer(coef, frame, phi, disc, operator="direct").tail
