"""Continuity sweeps over normal pairs, Hoelder and W^{1,p} fits, and kappa regressions."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .boundary_layers.mesh import Discretization
from .errors import ConfigError, UsageError
from .geometry import build_frame, great_circle_perturb, kappa, kappa_many, sample_boundary, unit
from .homogenized_data import CellData, LayerStore, corrector_layers, dirichlet_data, flux_layers, neumann_data, tail_map
from .periodic_fields import TrigTensor, grid_axes, load_trig_tensor
from .presets import coefficient_preset, data_preset

log = logging.getLogger(__name__)

ZERO = 1e-12


@dataclass
class SweepConfig:
    coefficient: str = "smooth"
    d: int = 2
    m: int = 1
    data: str = "mixed"
    normals: list = field(default_factory=lambda: [[0.5, 0.8660254037844386]])
    deltas: list = field(default_factory=lambda: [0.1, 0.03, 0.01])
    sigmas: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    kappa_band: list | None = None
    directions: int = 1
    n_theta: int = 16
    T: float = 60.0
    degree: int = 8
    h0: float | None = None
    growth: float = 1.5
    h_max: float = 2.0
    closure: str = "zero-neumann"
    tol: float = 1e-10
    cell_resolution: int = 16
    surface: dict | None = None
    seed: int = 0
    slope_gate: float = 0.9
    holder_gate: float = 0.8
    output_dir: str = "bltails-out"

    def __post_init__(self) -> None:
        for name in ("d", "m", "n_theta", "cell_resolution", "degree", "directions", "seed"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name} must be an integer", field=name)
        if any(not (0 < float(dl) <= 0.3) for dl in self.deltas):
            raise ConfigError("deltas must lie in (0, 0.3]", field="deltas")
        if any(not (0 < float(s) < 1) for s in self.sigmas):
            raise ConfigError("sigmas must lie in (0, 1)", field="sigmas")
        for i, n in enumerate(self.normals):
            if len(n) != self.d:
                raise ConfigError(f"normal has {len(n)} components, expected {self.d}", field=f"normals[{i}]")
        if self.kappa_band is not None and (len(self.kappa_band) != 2 or self.kappa_band[0] >= self.kappa_band[1]):
            raise ConfigError("kappa_band must be [low, high] with low < high", field="kappa_band")
        self.discretization()

    @classmethod
    def from_dict(cls, obj: dict) -> "SweepConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object", field="$")
        names = {f.name for f in fields(cls)}
        for key in obj:
            if key not in names:
                raise ConfigError(f"unknown config field {key!r}", field=key)
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc), field="$") from None

    def to_json(self) -> dict:
        return asdict(self)

    def discretization(self) -> Discretization:
        return Discretization(
            self.n_theta, float(self.T), self.degree, self.h0, self.growth, self.h_max, self.closure, self.tol
        )

    def coefficients(self) -> TrigTensor:
        if Path(self.coefficient).suffix == ".json":
            A = load_trig_tensor(self.coefficient)
            if (A.d, A.m) != (self.d, self.m):
                raise ConfigError("coefficient file dimensions differ from d, m", field="coefficient")
            return A
        return coefficient_preset(self.coefficient, self.d, self.m)

    def data_slice(self) -> np.ndarray:
        return data_preset(self.data, self.n_theta, self.d, self.m)

    def neumann_slice(self) -> np.ndarray:
        """g_{lr} = data for l < r and zero otherwise."""
        base = self.data_slice()
        g = np.zeros((self.d, self.d) + base.shape)
        for l in range(self.d):
            for r in range(l + 1, self.d):
                g[l, r] = base
        return g


@dataclass
class ContinuityRecord:
    n1: np.ndarray
    n2: np.ndarray
    distance: float
    kappa: float
    trace_diff: float
    data_diff: float
    kind: str
    runtime: float = 0.0

    def row(self) -> list[str]:
        vals = [*self.n1, *self.n2, self.distance, self.kappa, self.trace_diff, self.data_diff]
        return [repr(float(v)) for v in vals] + [self.kind]


def _pairs(cfg: SweepConfig) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """Base normals perturbed along great circles, filtered by kappa and the optional band."""
    rng = np.random.default_rng(cfg.seed)
    cutoff = max(1, cfg.n_theta // 2)
    out = []
    for base in cfg.normals:
        n1 = unit(base)
        for delta in cfg.deltas:
            for _ in range(cfg.directions):
                for _try in range(50):
                    n2 = great_circle_perturb(n1, float(delta), rng.normal(size=cfg.d))
                    k2 = kappa(n2, cutoff).kappa_hat
                    lo, hi = cfg.kappa_band or (0.0, np.inf)
                    if k2 > 0 and lo <= k2 <= hi:
                        out.append((n1, n2, float(delta)))
                        break
                else:
                    log.warning("no admissible partner for %s at delta=%g", n1, delta)
    return out


def _l2_theta(diff: np.ndarray, d: int) -> float:
    return float(np.sqrt((diff**2).mean(axis=grid_axes(d)).sum()))


def continuity_sweep_dirichlet(
    cfg: SweepConfig, cell: CellData | None = None, store: LayerStore | None = None
) -> list[ContinuityRecord]:
    A = cfg.coefficients()
    cell = cell or CellData.compute(A, cfg.cell_resolution, with_flux=False, tol=cfg.tol)
    store = store or LayerStore()
    disc = cfg.discretization()
    f = cfg.data_slice()
    cutoff = max(1, cfg.n_theta // 2)
    records = []
    for n1, n2, _delta in _pairs(cfg):
        t0 = time.perf_counter()
        k1, k2 = kappa(n1, cutoff).kappa_hat, kappa(n2, cutoff).kappa_hat
        if k1 == 0 or k2 == 0:
            log.warning("skipping pair with a rational-detected member")
            continue
        fr1, fr2 = build_frame(n1), build_frame(n2)
        L1, L2 = corrector_layers(cell, fr1, disc, store), corrector_layers(cell, fr2, disc, store)
        diff = np.stack([L1[key].dt_trace() - L2[key].dt_trace() for key in sorted(L1)])
        v1, _ = dirichlet_data(cell, f, fr1, disc, store)
        v2, _ = dirichlet_data(cell, f, fr2, disc, store)
        records.append(
            ContinuityRecord(
                n1,
                n2,
                float(np.linalg.norm(n1 - n2)),
                max(k1, k2),
                _l2_theta(diff, cfg.d),
                float(np.linalg.norm(v1 - v2)),
                "dirichlet",
                time.perf_counter() - t0,
            )
        )
    return records


def continuity_sweep_neumann(
    cfg: SweepConfig, cell: CellData | None = None, store: LayerStore | None = None
) -> list[ContinuityRecord]:
    A = cfg.coefficients()
    cell = cell or CellData.compute(A, cfg.cell_resolution, with_flux=True, tol=cfg.tol)
    store = store or LayerStore()
    disc = cfg.discretization()
    g = cfg.neumann_slice()
    cutoff = max(1, cfg.n_theta // 2)
    records = []
    for n1, n2, _delta in _pairs(cfg):
        t0 = time.perf_counter()
        k1, k2 = kappa(n1, cutoff).kappa_hat, kappa(n2, cutoff).kappa_hat
        if k1 == 0 or k2 == 0:
            log.warning("skipping pair with a rational-detected member")
            continue
        fr1, fr2 = build_frame(n1), build_frame(n2)
        L1, L2 = flux_layers(cell, fr1, disc, store), flux_layers(cell, fr2, disc, store)
        diff = np.stack([L1[key].theta_gradient(0) - L2[key].theta_gradient(0) for key in sorted(L1)])
        v1, _ = neumann_data(cell, g, fr1, disc, store)
        v2, _ = neumann_data(cell, g, fr2, disc, store)
        records.append(
            ContinuityRecord(
                n1,
                n2,
                float(np.linalg.norm(n1 - n2)),
                max(k1, k2),
                _l2_theta(diff, cfg.d),
                float(np.linalg.norm(v1 - v2)),
                "neumann",
                time.perf_counter() - t0,
            )
        )
    return records


@dataclass
class EnvelopeFit:
    slope: float
    intercept: float
    points: int
    degenerate: bool
    passed: bool | None = None

    def to_json(self) -> dict:
        return asdict(self)


def envelope_fit(x: np.ndarray, y: np.ndarray, bins: int | None = None, gate: float | None = None) -> EnvelopeFit:
    """Log-log slope of the upper envelope: the maximum of y within log-spaced bins of x."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2:
        raise UsageError(f"need at least two points for a fit, got {x.size}")
    if np.all(y <= ZERO):
        return EnvelopeFit(0.0, float("-inf"), int(x.size), True, None if gate is None else True)
    keep = (x > 0) & (y > ZERO)
    lx, ly = np.log(x[keep]), np.log(y[keep])
    ux = np.unique(lx)
    if bins is None and ux.size <= 12:
        centers = ux
        env = np.array([ly[lx == u].max() for u in ux])
    else:
        edges = np.linspace(lx.min(), lx.max() + 1e-12, (bins or 8) + 1)
        idx = np.clip(np.digitize(lx, edges) - 1, 0, len(edges) - 2)
        centers, env = [], []
        for b in np.unique(idx):
            sel = idx == b
            j = np.argmax(ly[sel])
            centers.append(lx[sel][j])
            env.append(ly[sel][j])
        centers, env = np.array(centers), np.array(env)
    if centers.size < 2:
        raise UsageError("all points fall in one bin; no slope can be fitted")
    slope, icpt = np.polyfit(centers, env, 1)
    passed = None if gate is None else bool(slope >= gate)
    return EnvelopeFit(float(slope), float(icpt), int(centers.size), False, passed)


def fit_continuity(records: list[ContinuityRecord], quantity: str = "trace_diff", gate: float = 0.9) -> EnvelopeFit:
    x = np.array([r.distance for r in records])
    y = np.array([getattr(r, quantity) for r in records])
    return envelope_fit(x, y, gate=gate)


@dataclass
class KappaFit:
    sigma_hat: float | None
    C_hat: float | None
    residuals: list
    decades: float
    flagged: bool

    def to_json(self) -> dict:
        return asdict(self)


def kappa_weighted_fit(records: list[ContinuityRecord], quantity: str = "data_diff", min_decades: float = 1.5) -> KappaFit:
    """Least squares of log(diff / |n1 - n2|) on log kappa; slope is -sigma."""
    kap = np.array([r.kappa for r in records], dtype=float)
    dist = np.array([r.distance for r in records], dtype=float)
    diff = np.array([getattr(r, quantity) for r in records], dtype=float)
    keep = (kap > 0) & (dist > 0) & (diff > ZERO)
    if keep.sum() < 2:
        return KappaFit(None, None, [], 0.0, True)
    decades = float(np.log10(kap[keep].max() / kap[keep].min()))
    if decades < min_decades:
        return KappaFit(None, None, [], decades, True)
    x, y = np.log(kap[keep]), np.log(diff[keep] / dist[keep])
    slope, icpt = np.polyfit(x, y, 1)
    res = (y - (slope * x + icpt)).tolist()
    return KappaFit(float(-slope), float(np.exp(icpt)), res, decades, False)


def sigma_constants(records: list[ContinuityRecord], sigmas, quantity: str = "data_diff") -> dict:
    """Largest observed diff / (kappa^-sigma |n1 - n2|) for every sigma."""
    out = {}
    for s in sigmas:
        vals = [getattr(r, quantity) / (r.kappa ** (-s) * r.distance) for r in records if r.distance > 0]
        out[str(s)] = float(max(vals)) if vals else 0.0
    return out


# surfaces


def surface_gradients(points: np.ndarray, normals: np.ndarray, values: np.ndarray, neighbors: int = 8) -> np.ndarray:
    """Magnitude of the discrete tangential gradient of sampled values (one row per point)."""
    values = values.reshape(len(points), -1)
    d = points.shape[1]
    if d == 2:
        ang = np.arctan2(points[:, 1], points[:, 0])
        order = np.argsort(ang)
        p, v = points[order], values[order]
        nxt = np.roll(np.arange(len(p)), -1)
        seg = np.linalg.norm(p[nxt] - p, axis=1)
        fwd = np.linalg.norm(v[nxt] - v, axis=1) / seg
        g = 0.5 * (fwd + np.roll(fwd, 1))
        out = np.empty_like(g)
        out[order] = g
        return out
    tree = cKDTree(points)
    _, idx = tree.query(points, k=neighbors + 1)
    out = np.empty(len(points))
    for i in range(len(points)):
        nb = idx[i, 1:]
        dx = points[nb] - points[i]
        dx -= np.outer(dx @ normals[i], normals[i])
        dv = values[nb] - values[i]
        coef, *_ = np.linalg.lstsq(dx, dv, rcond=None)
        out[i] = float(np.linalg.norm(coef))
    return out


def lp_norms(grad: np.ndarray, weights: np.ndarray, ps=(2, 4, 8)) -> dict:
    w = weights / weights.sum()
    return {str(p): float((w * grad**p).sum() ** (1.0 / p)) for p in ps}


@dataclass
class HolderReport:
    alpha_hat: float | None
    exact: bool
    samples: int
    trusted: int
    pairs: int
    fit: dict
    lp: dict
    lp_doubled: dict
    lp_stable: bool
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def _diophantine_surface(cfg: SweepConfig, count: int):
    surf = cfg.surface or {}
    axes = surf.get("semi_axes", [1.0] * cfg.d)
    surf = sample_boundary(axes, count)
    kap = kappa_many(surf.normals, max(1, cfg.n_theta // 2))
    return surf, kap


def _fbar_on_surface(cfg: SweepConfig, cell: CellData, store: LayerStore, count: int):
    surf, kap = _diophantine_surface(cfg, count)
    disc = cfg.discretization()
    base = cfg.data_slice()
    keep = kap > 0
    vals = []
    for x, n in zip(surf.points[keep], surf.normals[keep]):
        # f(x, theta) = (1 + x_1 / 2) * data(theta)
        v, _ = dirichlet_data(cell, (1 + 0.5 * x[0]) * base, build_frame(n), disc, store)
        vals.append(v)
    return surf.points[keep], surf.normals[keep], surf.weights[keep], np.array(vals)


# pairs farther apart than this measure global variation, not local regularity
HOLDER_RADIUS = 0.5


def holder_fit(
    cfg: SweepConfig, cell: CellData | None = None, store: LayerStore | None = None, min_samples: int = 50
) -> HolderReport:
    """Hoelder exponent of n -> mu(n, phi) and W^{1,p} norms of fbar over an ellipsoid sample."""
    A = cfg.coefficients()
    surf = cfg.surface or {}
    count = int(surf.get("count", 64))
    surf, kap = _diophantine_surface(cfg, count)
    dioph = np.flatnonzero(kap > 0)
    if dioph.size < min_samples:
        raise UsageError(f"holder fit needs >= {min_samples} Diophantine normals, got {dioph.size}")
    disc = cfg.discretization()
    phi = cfg.data_slice()
    mus, normals = [], []
    for i in dioph:
        tl = tail_map(A, surf.normals[i], phi, disc)
        if tl.trusted:
            mus.append(tl.value)
            normals.append(surf.normals[i])
    if len(mus) < min_samples:
        raise UsageError(f"only {len(mus)} trusted tails (need {min_samples}); increase T")
    mus, normals = np.array(mus), np.array(normals)
    dist = np.linalg.norm(normals[:, None] - normals[None], axis=2)
    iu = np.triu_indices(len(normals), 1)
    sel = dist[iu] <= HOLDER_RADIUS
    dx = dist[iu][sel]
    dy = np.linalg.norm(mus[iu[0]] - mus[iu[1]], axis=1)[sel]
    if dx.size < 2:
        raise UsageError(f"fewer than two normal pairs within distance {HOLDER_RADIUS}")
    exact = bool(np.all(dy <= 1e-8))
    if exact:
        fit = EnvelopeFit(float("inf"), 0.0, int(dx.size), True, True)
        alpha = None
    else:
        fit = envelope_fit(dx, dy, bins=8, gate=cfg.holder_gate)
        alpha = fit.slope
    cell = cell or CellData.compute(A, cfg.cell_resolution, with_flux=False, tol=cfg.tol)
    store = store or LayerStore()
    lp = {}
    for c in (count, 2 * count):
        pts, nrm, w, vals = _fbar_on_surface(cfg, cell, store, c)
        lp[c] = lp_norms(surface_gradients(pts, nrm, vals), w)
    a, b = lp[count], lp[2 * count]
    stable = all(abs(a[p] - b[p]) <= 0.2 * max(abs(b[p]), ZERO) or max(a[p], b[p]) <= 1e-8 for p in a)
    passed = bool((exact or (alpha is not None and alpha >= cfg.holder_gate)) and stable)
    return HolderReport(alpha, exact, int(count), len(mus), int(dx.size), fit.to_json(), a, b, bool(stable), passed)


# output


RECORD_HEADER = ["n1", "n2", "distance", "kappa", "trace_diff", "data_diff", "kind"]


def write_records(records: list[ContinuityRecord], path: str | Path) -> None:
    """Records CSV; wall-clock times are kept out so reruns are byte-identical."""
    if not records:
        header = RECORD_HEADER
    else:
        d = len(records[0].n1)
        header = [f"n1_{i}" for i in range(d)] + [f"n2_{i}" for i in range(d)] + RECORD_HEADER[2:]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in records:
            w.writerow(r.row())


def write_plot_data(records: list[ContinuityRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["log_distance", "log_trace_diff", "log_data_diff", "log_kappa"])
        for r in records:
            row = [r.distance, r.trace_diff, r.data_diff, r.kappa]
            w.writerow([repr(float(np.log(v))) if v > 0 else "-inf" for v in row])
