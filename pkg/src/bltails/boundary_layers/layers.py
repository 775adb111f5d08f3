"""Dirichlet and Neumann boundary layers in lifted variables, tails and diagnostics."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ..cell_problems import CorrectorSet, FluxCorrectorSet
from ..errors import ConfigError, PreconditionError, RangeError
from ..geometry import DiophantineReport, Frame, kappa
from ..krylov import solve
from ..periodic_fields import GridField, TrigTensor, grid_axes, wavenumbers
from .mesh import Discretization, TMesh
from .operator import LiftedOperator, frozen_mask

log = logging.getLogger(__name__)

OPERATORS = ("adjoint", "direct")
DIOPHANTINE = "Diophantine condition on the normal"


@dataclass
class TailEstimate:
    value: np.ndarray
    uncertainty: float
    trusted: bool

    def to_json(self) -> dict:
        return {"value": self.value.tolist(), "uncertainty": self.uncertainty, "trusted": self.trusted}


@dataclass
class LiftedSolution:
    """Field V(theta, t) stored as (m, J, N, ..., N) on the t-mesh of ``disc``."""

    values: np.ndarray
    kind: str
    frame: Frame
    disc: Discretization
    tail: TailEstimate
    interior_residual: float
    boundary_residual: float
    iterations: int
    history: list[float] = field(default_factory=list)
    label: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.mesh = TMesh(self.disc)

    @property
    def d(self) -> int:
        return self.values.ndim - 2

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.mesh.t

    def trace(self) -> np.ndarray:
        return self.values[:, 0]

    def dt_trace(self) -> np.ndarray:
        """d/dt V(theta, 0) from the first element's differentiation matrix."""
        mesh = self.mesh
        row = mesh.Dref[0] * mesh.scale[0]
        return np.tensordot(row, self.values[:, : mesh.p + 1], axes=(0, 1))

    def nodal_dt(self) -> np.ndarray:
        """d/dt V at every node; element values averaged at shared breakpoints."""
        mesh = self.mesh
        loc = mesh.derivative_local(mesh.gather(self.values, axis=1), axis=1)
        count = mesh.assemble(np.ones((mesh.E, mesh.p + 1)))
        summed = mesh.assemble_axis(loc, axis=1)
        return summed / count.reshape((1, -1) + (1,) * self.d)

    def theta_gradient(self, node: int | None = None) -> np.ndarray:
        """Full spectral theta-gradient, shape (m, d, [J,] grid)."""
        vals = self.values if node is None else self.values[:, node]
        return _spectral_gradient(vals, self.d, axis=1)

    def tangential_gradient(self) -> np.ndarray:
        """N^T grad_theta V at every node, shape (m, d-1, J, grid)."""
        g = self.theta_gradient()
        return np.einsum("ia,xi...->xa...", self.frame.N, g)

    def to_arrays(self) -> dict:
        meta = self.to_json()
        meta["history"] = self.history
        return {"values": self.values, "meta": np.array(json.dumps(meta))}

    @classmethod
    def from_arrays(cls, arrays: dict, frame: Frame, disc: Discretization) -> "LiftedSolution":
        meta = json.loads(str(arrays["meta"]))
        tl = meta["tail"]
        return cls(
            np.array(arrays["values"]),
            meta["kind"],
            frame,
            disc,
            TailEstimate(np.array(tl["value"]), tl["uncertainty"], tl["trusted"]),
            meta["interior_residual"],
            meta["boundary_residual"],
            meta["iterations"],
            meta["history"],
            meta["label"],
        )

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.frame.n.tolist(),
            "branch": self.frame.branch,
            "discretization": self.disc.to_json(),
            "tail": self.tail.to_json(),
            "interior_residual": self.interior_residual,
            "boundary_residual": self.boundary_residual,
            "iterations": self.iterations,
            "label": self.label,
        }


def _spectral_gradient(values: np.ndarray, d: int, axis: int) -> np.ndarray:
    n = values.shape[-1]
    axes = grid_axes(d)
    hat = np.fft.rfftn(values, axes=axes)
    ks = wavenumbers(n, d, real=True)
    parts = [np.fft.irfftn(2j * np.pi * k * hat, s=(n,) * d, axes=axes) for k in ks]
    return np.stack(parts, axis=axis)


def _coefficient_for(A: TrigTensor, operator: str) -> TrigTensor:
    if operator not in OPERATORS:
        raise ConfigError(f"operator must be one of {OPERATORS}", field="operator")
    return A.adjoint() if operator == "adjoint" else A


def _data_array(phi, d: int, m: int, n: int) -> np.ndarray:
    vals = phi.values if isinstance(phi, GridField) else np.asarray(phi, dtype=float)
    if vals.ndim == d:
        vals = vals[None]
    if vals.shape != (m,) + (n,) * d:
        raise ConfigError(f"boundary data shape {vals.shape} does not match (m,)+grid {(m,) + (n,) * d}")
    return vals


def _default_kappa(frame: Frame, disc: Discretization) -> DiophantineReport:
    # the discrete problem only carries modes with |k|_inf <= N/2
    return kappa(frame.n, max(1, disc.n_theta // 2))


def estimate_tail(values: np.ndarray, tol: float, scale: float) -> TailEstimate:
    """Theta-mean over the final quarter of nodes; spread across that window as uncertainty."""
    d = values.ndim - 2
    J = values.shape[1]
    start = J - max(2, J // 4)
    means = values[:, start:].mean(axis=grid_axes(d))
    value = means.mean(axis=1)
    spread = float(np.max(means.max(axis=1) - means.min(axis=1))) if means.size else 0.0
    trusted = spread < 10 * tol * max(1.0, scale)
    return TailEstimate(value, spread, bool(trusted))


def tail(solution: LiftedSolution) -> TailEstimate:
    return solution.tail


def _run(op: LiftedOperator, b: np.ndarray, disc: Discretization):
    res = solve(op.apply, b.ravel(), op.precondition, op.symmetric, disc.tol, disc.maxiter)
    return res


def solve_dirichlet_layer(
    A: TrigTensor,
    frame: Frame,
    phi,
    disc: Discretization,
    operator: str = "adjoint",
    kappa_report: DiophantineReport | None = None,
    label: dict | None = None,
) -> LiftedSolution:
    """Lifted Dirichlet problem with V(., 0) = phi.

    The coefficient is B = M^T A* M by default; ``operator="direct"`` uses A
    itself, which is how tails of the non-adjoint operator are obtained.
    """
    coef = _coefficient_for(A, operator)
    d, m, n = A.d, A.m, disc.n_theta
    if n < A.min_resolution:
        raise ConfigError(f"n_theta={n} below anti-aliasing bound {A.min_resolution}", field="n_theta")
    data = _data_array(phi, d, m, n)
    if kappa_report is not None:
        disc.check_far_field(kappa_report.kappa_hat)
    if disc.closure == "tail-dirichlet":
        rep = kappa_report or _default_kappa(frame, disc)
        if rep.kappa_hat == 0:
            raise PreconditionError(
                "tail-Dirichlet closure needs a Diophantine normal; the tail of a rational normal is not defined",
                hypothesis=DIOPHANTINE,
            )
    op = LiftedOperator(coef, frame, disc, frozen_mask(disc, d, dirichlet=True))
    lift = np.zeros(op.shape)
    lift[:, 0] = data
    # Nyquist content of the data stays on the boundary node only
    lift_h = op.rfft(lift)
    lift_h[:, 1:] = np.where(op.free[1:], lift_h[:, 1:], 0)
    lift = op.irfft(lift_h)
    lift[:, 0] = data
    bh = -np.where(op.free, op.raw_hat(op.rfft(lift)), 0)
    b = op.irfft(bh)
    res = _run(op, b, disc)
    V = res.x.reshape(op.shape) + lift
    V[:, 0] = data
    scale = float(np.abs(data).max()) if data.size else 0.0
    sol = LiftedSolution(
        V,
        "dirichlet",
        frame,
        disc,
        estimate_tail(V, disc.tol, scale),
        res.residual,
        float(np.abs(V[:, 0] - data).max()),
        res.iterations,
        res.history,
        dict(label or {}, operator=operator, coeff_hash=A.digest()),
    )
    log.info("dirichlet layer n=%s: %d its, residual %.2e", frame.n, res.iterations, res.residual)
    return sol


def solve_corrector_dirichlet(
    A: TrigTensor,
    chistar: CorrectorSet,
    frame: Frame,
    k: int,
    beta: int,
    disc: Discretization,
    **kw,
) -> LiftedSolution:
    """Dirichlet layer with data -chi*_k^beta (adjoint correctors of A)."""
    if chistar.coeff_hash != A.adjoint().digest():
        raise ConfigError("correctors were not computed for the adjoint of A", field="chistar")
    data = -chistar.component(k, beta).values
    data = _resample(data, A.d, disc.n_theta)
    return solve_dirichlet_layer(A, frame, data, disc, label={"data": "corrector", "k": k, "beta": beta}, **kw)


def _resample(values: np.ndarray, d: int, n: int) -> np.ndarray:
    """Band-limited resampling of grid values (..., N0, ..., N0) to resolution n."""
    n0 = values.shape[-1]
    if n0 == n:
        return values
    axes = grid_axes(d)
    hat = np.fft.fftshift(np.fft.fftn(values, axes=axes), axes=axes)
    lead = values.shape[: values.ndim - d]
    out = np.zeros(lead + (n,) * d, dtype=complex)
    c0, c1 = n0 // 2, n // 2
    h = min(c0, c1)
    src = tuple(slice(c0 - h + 1, c0 + h) for _ in range(d))
    dst = tuple(slice(c1 - h + 1, c1 + h) for _ in range(d))
    out[(Ellipsis,) + dst] = hat[(Ellipsis,) + src]
    out = np.fft.ifftn(np.fft.ifftshift(out, axes=axes), axes=axes).real
    return out * (n / n0) ** d


def _neumann(
    A: TrigTensor,
    frame: Frame,
    g: np.ndarray,
    disc: Discretization,
    operator: str,
    kappa_report: DiophantineReport | None,
    label: dict,
) -> LiftedSolution:
    coef = _coefficient_for(A, operator)
    d, m = A.d, A.m
    rep = kappa_report or _default_kappa(frame, disc)
    if rep.kappa_hat == 0:
        raise PreconditionError(
            f"rational normal {frame.n.tolist()}: Neumann layer unsolvable without the Diophantine condition",
            hypothesis=DIOPHANTINE,
        )
    if kappa_report is not None:
        disc.check_far_field(kappa_report.kappa_hat)
    mesh = TMesh(disc)
    # any positive pin works; this one matches the scale of the first stiffness rows
    pin = 1.0 / mesh.h[0]
    op = LiftedOperator(coef, frame, disc, frozen_mask(disc, d, dirichlet=False), pin=pin)
    bfull = np.zeros(op.shape)
    bfull[:, 0] = g
    bh = np.where(op.free, op.rfft(bfull), 0)
    b = op.irfft(bh)
    res = _run(op, b, disc)
    U = res.x.reshape(op.shape)
    # weak flux residual on the boundary row, relative to the data
    r0 = op.irfft(op.apply_hat(op.rfft(U)) - bh)[:, 0]
    gnorm = float(np.linalg.norm(g))
    bres = float(np.linalg.norm(r0) / gnorm) if gnorm > 0 else float(np.linalg.norm(r0))
    scale = float(np.abs(U[:, 0]).max()) if U.size else 0.0
    return LiftedSolution(
        U,
        "neumann",
        frame,
        disc,
        estimate_tail(U, disc.tol, scale),
        res.residual,
        bres,
        res.iterations,
        res.history,
        dict(label, operator=operator, coeff_hash=A.digest(), kappa_hat=rep.kappa_hat),
    )


def solve_neumann_layer(
    A: TrigTensor,
    frame: Frame,
    phi,
    T_vec,
    disc: Discretization,
    operator: str = "adjoint",
    kappa_report: DiophantineReport | None = None,
) -> LiftedSolution:
    """Lifted Neumann problem with conormal data T.grad_theta phi, normalized to zero theta-mean at t = 0."""
    T_vec = np.asarray(T_vec, dtype=float)
    if abs(T_vec @ frame.n) > 1e-10:
        raise ConfigError("T_vec must be tangential (T_vec . n = 0)", field="T_vec")
    if np.linalg.norm(T_vec) > 1 + 1e-12:
        raise ConfigError("|T_vec| must be <= 1", field="T_vec")
    d, m = A.d, A.m
    data = _data_array(phi, d, m, disc.n_theta)
    grad = _spectral_gradient(data, d, axis=1)  # (m, d, grid)
    g = np.einsum("i,xi...->x...", T_vec, grad)
    return _neumann(A, frame, g, disc, operator, kappa_report, {"data": "tangential", "T_vec": T_vec.tolist()})


def flux_neumann_data(flux: FluxCorrectorSet, n: np.ndarray, k: int, beta: int, resolution: int) -> np.ndarray:
    """(1/2) sum_ij T_ij . grad phi_{ij,k}^{. beta} with T_ij = n_i e_j - n_j e_i, shape (m, grid)."""
    d = flux.d
    phi = _resample(flux.values[:, :, k, :, beta], d, resolution)  # (i, j, alpha, grid)
    grad = _spectral_gradient(phi, d, axis=3)  # (i, j, alpha, ell, grid)
    # T_ij . grad = n_i d_j - n_j d_i
    first = np.einsum("i,ijaj...->a...", n, grad)
    second = np.einsum("j,ijai...->a...", n, grad)
    return 0.5 * (first - second)


def solve_flux_neumann(
    A: TrigTensor,
    flux: FluxCorrectorSet,
    frame: Frame,
    k: int,
    beta: int,
    disc: Discretization,
    operator: str = "adjoint",
    kappa_report: DiophantineReport | None = None,
) -> LiftedSolution:
    if flux.coeff_hash != A.adjoint().digest():
        raise ConfigError("flux correctors were not computed for the adjoint of A", field="flux")
    g = flux_neumann_data(flux, frame.n, k, beta, disc.n_theta)
    return _neumann(A, frame, g, disc, operator, kappa_report, {"data": "flux", "k": k, "beta": beta})


# diagnostics


@dataclass
class DecayProfile:
    t: np.ndarray
    l2_tangential: np.ndarray
    l2_dt: np.ndarray
    l2_deviation: np.ndarray
    max_gradient: np.ndarray

    def rows(self):
        for i in range(self.t.size):
            yield (self.t[i], self.l2_tangential[i], self.l2_dt[i], self.l2_deviation[i], self.max_gradient[i])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "l2_tangential", "l2_dt", "l2_deviation", "max_gradient"])
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


def decay_profile(solution: LiftedSolution) -> DecayProfile:
    d = solution.d
    axes = grid_axes(d)
    tang = solution.tangential_gradient()  # (m, d-1, J, grid)
    dt = solution.nodal_dt()  # (m, J, grid)
    dev = solution.values - solution.tail.value.reshape((-1, 1) + (1,) * d)
    tang2 = (tang**2).sum(axis=(0, 1))
    dt2 = (dt**2).sum(axis=0)
    return DecayProfile(
        solution.t.copy(),
        np.sqrt(tang2.mean(axis=axes)),
        np.sqrt(dt2.mean(axis=axes)),
        np.sqrt((dev**2).sum(axis=0).mean(axis=axes)),
        (np.sqrt(tang2) + np.sqrt(dt2)).max(axis=axes),
    )


@dataclass
class DecayFit:
    slope_t: float
    slope_kappa: float
    points_t: int
    points_kappa: int
    floor: float

    def to_json(self) -> dict:
        return self.__dict__.copy()


def _loglog(x: np.ndarray, y: np.ndarray) -> tuple[float, int]:
    if x.size < 3:
        return float("nan"), int(x.size)
    slope = np.polyfit(np.log(x), np.log(y), 1)[0]
    return float(slope), int(x.size)


def fit_decay(profile: DecayProfile, kappa_hat: float, floor: float = 1e-9) -> DecayFit:
    """Log-log slopes of the max-gradient profile against (1+t) and (1+kappa t).

    Windows are [1, T/2] and [2/kappa, T/2]. Points below ``floor`` times the
    profile maximum are solver noise and are dropped.
    """
    t, y = profile.t, profile.max_gradient
    T = t[-1]
    cut = floor * max(float(y.max()), 1e-300)
    keep = y > cut
    w1 = keep & (t >= 1) & (t <= T / 2)
    s1, n1 = _loglog(1 + t[w1], y[w1])
    if kappa_hat > 0:
        w2 = keep & (t >= 2 / kappa_hat) & (t <= T / 2)
        s2, n2 = _loglog(1 + kappa_hat * t[w2], y[w2])
    else:
        s2, n2 = float("nan"), 0
    return DecayFit(s1, s2, n1, n2, cut)


def fit_exponential(profile: DecayProfile, t_min: float, t_max: float, floor: float = 1e-9) -> tuple[float, float]:
    """Rate and R^2 of a log-linear fit to the max-gradient profile."""
    t, y = profile.t, profile.max_gradient
    keep = (t >= t_min) & (t <= t_max) & (y > floor * max(float(y.max()), 1e-300))
    if keep.sum() < 3:
        raise ConfigError("too few profile points above the noise floor for an exponential fit")
    coef = np.polyfit(t[keep], np.log(y[keep]), 1)
    pred = np.polyval(coef, t[keep])
    ly = np.log(y[keep])
    ss_res = float(((ly - pred) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    return float(-coef[0]), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def _trig_eval(values: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of (..., N, ..., N) grid values at one point; Nyquist modes dropped."""
    d = theta.size
    n = values.shape[-1]
    axes = grid_axes(d)
    hat = np.fft.fftn(values, axes=axes) / n**d
    phase = np.ones((n,) * d, dtype=complex)
    for ax, k in enumerate(wavenumbers(n, d)):
        phase = phase * np.exp(2j * np.pi * k * theta[ax])
    nyq = np.zeros((n,) * d, dtype=bool)
    for ax, k in enumerate(wavenumbers(n, d, drop_nyquist=False)):
        nyq |= np.broadcast_to(np.abs(k) == n // 2, nyq.shape)
    phase[nyq] = 0
    return (hat * phase).sum(axis=axes).real


def halfspace_reconstruct(solution: LiftedSolution, s: float, x) -> np.ndarray:
    """Half-space value u^s(x) = V(x - (x.n) n - s n, -x.n - s) for x.n + s < 0."""
    x = np.asarray(x, dtype=float)
    n = solution.frame.n
    depth = -(x @ n) - s
    if -1e-12 < depth < 0:
        depth = 0.0
    if depth < 0:
        raise RangeError("point lies outside the half-space x.n + s < 0")
    if depth > solution.mesh.T + 1e-12:
        raise RangeError(f"depth {depth:g} beyond the truncation T={solution.mesh.T:g}")
    theta = np.mod(x - (x @ n) * n - s * n, 1.0)
    slab = solution.mesh.interpolate(solution.values, depth, axis=1)
    return _trig_eval(slab, theta)


# weighted norms for forced problems


@dataclass
class WeightedNormReport:
    sigma: float
    lhs: float
    rhs: float
    ratio: float
    ratio_refined: float | None
    stable: bool | None

    def to_json(self) -> dict:
        return self.__dict__.copy()


def _lagrange_matrix(x_nodes: np.ndarray, x_eval: np.ndarray) -> np.ndarray:
    L = np.ones((x_eval.size, x_nodes.size))
    for j, xj in enumerate(x_nodes):
        for k, xk in enumerate(x_nodes):
            if k != j:
                L[:, j] *= (x_eval - xk) / (xj - xk)
    return L


def _weighted_quadrature(mesh: TMesh, sigma: float, q: int):
    """Per element: evaluation matrix from GLL nodes, derivative matrix, t points and weights of t^(sigma-1) dt."""
    out = []
    xg, wg = roots_legendre(q)
    xj, wj = roots_jacobi(q, 0.0, sigma - 1.0)
    D = mesh.Dref
    for e in range(mesh.E):
        a, h = mesh.breaks[e], mesh.h[e]
        if e == 0:
            xi, w = xj, wj * (h / 2) ** sigma
            tq = a + (xi + 1) * h / 2
        else:
            xi = xg
            tq = a + (xi + 1) * h / 2
            w = wg * (h / 2) * tq ** (sigma - 1)
        L = _lagrange_matrix(mesh.xref, xi)
        out.append((L, L @ D * mesh.scale[e], tq, w))
    return out


def _weighted_integrals(op: LiftedOperator, U: np.ndarray, G, H, sigma: float) -> tuple[float, float]:
    mesh = op.mesh
    d = op.d
    grad = _spectral_gradient(U, d, axis=1)  # (m, d, J, grid)
    tang = np.einsum("ia,xi...->xa...", op.frame.N, grad)
    lhs = rhs = 0.0
    for e, (L, DL, tq, w) in enumerate(_weighted_quadrature(mesh, sigma, mesh.p + 4)):
        nodes = mesh.idx[e]
        Ut = np.tensordot(DL, U[:, nodes], axes=(1, 1))  # (q, m, grid)
        Tg = np.tensordot(L, tang[:, :, nodes], axes=(1, 2))  # (q, m, d-1, grid)
        dens = (Ut**2).sum(axis=1) + (Tg**2).sum(axis=(1, 2))
        lhs += float(np.tensordot(w, dens.mean(axis=grid_axes(d)), axes=1))
        for tt, ww in zip(tq, w):
            g = G(tt)
            hh = H(tt)
            rhs += ww * float(((g**2).sum(axis=(0, 1)) + tt**2 * (hh**2).sum(axis=0)).mean())
    return lhs, rhs


def solve_forced(A: TrigTensor, frame: Frame, G, H, disc: Discretization, operator: str = "adjoint") -> np.ndarray:
    """Solve -div(B grad U) = div G + H with U(., 0) = 0 in lifted variables.

    ``G(t)`` returns the lifted vector field (d, m, grid) and ``H(t)`` the scalar
    source (m, grid) at depth t.
    """
    coef = _coefficient_for(A, operator)
    op = LiftedOperator(coef, frame, disc, frozen_mask(disc, A.d, dirichlet=True))
    mesh = op.mesh
    Gl = np.stack([np.stack([G(t) for t in row], axis=2) for row in mesh.t_local], axis=2)  # (d, m, E, p+1, grid)
    Hl = np.stack([np.stack([H(t) for t in row], axis=1) for row in mesh.t_local], axis=1)  # (m, E, p+1, grid)
    bh = -op.divergence_hat(Gl * op.wq) + op.rfft(mesh.assemble_axis(Hl * op.wq, axis=1))
    b = op.irfft(np.where(op.free, bh, 0))
    res = _run(op, b, disc)
    return res.x.reshape(op.shape), op


def weighted_norm_diagnostic(
    A: TrigTensor,
    frame: Frame,
    G: Callable[[float], np.ndarray],
    H: Callable[[float], np.ndarray],
    sigma: float,
    disc: Discretization,
    refine: bool = True,
    stability: float = 0.1,
) -> WeightedNormReport:
    """Both sides of the t^(sigma-1)-weighted energy inequality for a forced problem.

    With ``refine`` the ratio is recomputed on a mesh with twice as many
    elements near the boundary; ``stable`` records whether the two ratios agree
    within ``stability``.
    """
    if not 0 < sigma < 1:
        raise ConfigError("sigma must lie in (0, 1)", field="sigma")

    def run(dd: Discretization) -> tuple[float, float]:
        U, op = solve_forced(A, frame, G, H, dd)
        return _weighted_integrals(op, U, G, H, sigma)

    lhs, rhs = run(disc)
    ratio = lhs / rhs if rhs > 0 else 0.0
    ratio2 = stable = None
    if refine:
        fine = Discretization(
            disc.n_theta,
            disc.T,
            disc.degree,
            disc.first_step / 2,
            np.sqrt(disc.growth),
            disc.h_max / 2,
            disc.closure,
            disc.tol,
            disc.maxiter,
        )
        l2, r2 = run(fine)
        ratio2 = l2 / r2 if r2 > 0 else 0.0
        stable = bool(abs(ratio2 - ratio) <= stability * max(abs(ratio), 1e-300)) if rhs > 0 else True
    return WeightedNormReport(float(sigma), lhs, rhs, ratio, ratio2, stable)
