"""Command-line entry point: ``bltails <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boundary_layers import Discretization, decay_profile, fit_decay, solve_dirichlet_layer, solve_neumann_layer
from .boundary_layers.layers import solve_corrector_dirichlet, solve_flux_neumann
from .cache import DiskCache
from .cell_problems import directional_matrix, homogenized_tensor, solve_correctors, solve_flux_correctors
from .config import RunManifest, dump_json, load_json, to_jsonable
from .errors import BltailsError, ConfigError
from .experiments import (
    ContinuityRecord,
    SweepConfig,
    continuity_sweep_dirichlet,
    continuity_sweep_neumann,
    fit_continuity,
    holder_fit,
    kappa_weighted_fit,
    sigma_constants,
    write_plot_data,
    write_records,
)
from .geometry import ConvexSurface, build_frame, kappa, kappa_statistics, sample_boundary, unit
from .homogenized_data import BoundaryDataSample, CellData, LayerStore, dirichlet_data, neumann_data
from .periodic_fields import TrigTensor, check_ellipticity, load_trig_tensor
from .presets import coefficient_preset, data_preset

log = logging.getLogger("bltails")

EXIT_CONFIG = 2
EXIT_FAILURE = 1

NAMED_NORMALS = {
    "golden": lambda d: unit([1.0, (1 + 5**0.5) / 2] + [np.sqrt(2)] * (d - 2)),
    "sqrt2": lambda d: unit([1.0, np.sqrt(2)] + [np.sqrt(3)] * (d - 2)),
    "ed": lambda d: np.eye(d)[-1],
}


class ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message, field="argv")


def _coefficients(args) -> TrigTensor:
    if Path(args.coef).suffix == ".json":
        return load_trig_tensor(args.coef)
    return coefficient_preset(args.coef, args.d, args.m)


def _normal(args, d: int) -> np.ndarray:
    vals = args.n
    if len(vals) == 1 and vals[0] in NAMED_NORMALS:
        return NAMED_NORMALS[vals[0]](d)
    try:
        return unit([float(v) for v in vals])
    except ValueError:
        raise ConfigError(f"normal must be {d} floats or one of {sorted(NAMED_NORMALS)}", field="n") from None


def _disk(args) -> DiskCache | None:
    if getattr(args, "no_cache", False):
        return None
    return DiskCache(getattr(args, "cache_dir", None))


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(obj) -> None:
    print(json.dumps(to_jsonable(obj), indent=2, sort_keys=True))


def _coef_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--coef", default="smooth", help="preset name (identity, laminate, smooth, smooth-skew) or JSON file")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--m", type=int, default=1)


def _disc_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-theta", type=int, default=16)
    p.add_argument("--T", type=float, default=60.0)
    p.add_argument("--degree", type=int, default=8)
    p.add_argument("--closure", default="zero-neumann", choices=["zero-neumann", "tail-dirichlet"])
    p.add_argument("--tol", type=float, default=1e-10)


def _cache_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-cache", action="store_true", help="disable the solve cache")
    p.add_argument("--evict", action="store_true", help="clear the cache before running")
    p.add_argument("--cache-dir", default=None, help="cache directory (default: $BLTAILS_CACHE_DIR)")


def _disc(args) -> Discretization:
    return Discretization(args.n_theta, args.T, args.degree, closure=args.closure, tol=args.tol)


# subcommands


def cmd_correctors(args) -> int:
    A = _coefficients(args)
    man = RunManifest("correctors", vars_json(args), A.digest())
    with man.stage("solve"):
        chi = solve_correctors(A, args.resolution, args.tol)
    out = _out(args)
    chi.save(out / "correctors.json")
    summary = {"residual": chi.residual, "iterations": chi.iterations, "coeff_hash": chi.coeff_hash}
    dump_json(summary, out / "summary.json")
    man.tolerances = {"krylov": args.tol}
    man.write(out)
    _emit(summary)
    return 0


def cmd_homogenize(args) -> int:
    A = _coefficients(args)
    chi = solve_correctors(A, args.resolution, args.tol)
    ahat = homogenized_tensor(A, chi)
    report = check_ellipticity(A, A.lam, args.resolution)
    summary = {
        "ahat": ahat.values,
        "min_eigenvalue": ahat.min_eigenvalue(),
        "ellipticity": {"lambda_min": report.lambda_min, "passed": report.passed},
    }
    if args.n:
        n = _normal(args, A.d)
        summary["h"] = directional_matrix(ahat.adjoint(), n)
    _emit(summary)
    return 0


def cmd_flux(args) -> int:
    A = _coefficients(args)
    Astar = A.adjoint()
    chistar = solve_correctors(Astar, args.resolution, args.tol)
    flux = solve_flux_correctors(Astar, chistar)
    _emit(
        {
            "divergence_residual": flux.divergence_residual,
            "antisymmetry_residual": flux.antisymmetry_residual,
            "max_abs": float(np.abs(flux.values).max()),
        }
    )
    return 0


def cmd_kappa(args) -> int:
    n = _normal(args, len(args.n) if len(args.n) > 1 else args.d)
    _emit(kappa(n, args.cutoff).to_json())
    return 0


def cmd_kappa_stats(args) -> int:
    surf = sample_boundary(args.semi_axes, args.count)
    if args.export:
        surf.to_csv(args.export)
    _emit(kappa_statistics(surf, args.cutoff, args.q).to_json())
    return 0


def _parse_index(text: str) -> tuple[int, int]:
    try:
        k, beta = (int(v) for v in text.split(":", 1)[1].split(","))
    except ValueError:
        raise ConfigError("expected data of the form corrector:k,beta or flux:k,beta", field="data") from None
    return k, beta


def cmd_layer(args) -> int:
    A = _coefficients(args)
    n = _normal(args, A.d)
    frame = build_frame(n)
    disc = _disc(args)
    man = RunManifest("layer", vars_json(args), A.digest())
    man.tolerances = {"krylov": args.tol}
    rep = kappa(n, max(1, args.n_theta // 2))
    with man.stage("solve"):
        if args.data.startswith("corrector:"):
            k, beta = _parse_index(args.data)
            chistar = solve_correctors(A.adjoint(), args.n_theta, args.tol)
            sol = solve_corrector_dirichlet(A, chistar, frame, k, beta, disc)
        elif args.data.startswith("flux:"):
            k, beta = _parse_index(args.data)
            cell = CellData.compute(A, args.n_theta, with_flux=True, tol=args.tol)
            sol = solve_flux_neumann(A, cell.flux, frame, k, beta, disc)
        else:
            phi = data_preset(args.data, args.n_theta, A.d, A.m)
            if args.kind == "neumann":
                tvec = np.zeros(A.d)
                tvec[0] = 1.0
                tvec -= (tvec @ n) * n
                tvec = unit(tvec) if np.linalg.norm(tvec) > 1e-12 else frame.N[:, 0]
                sol = solve_neumann_layer(A, frame, phi, tvec, disc)
            else:
                sol = solve_dirichlet_layer(A, frame, phi, disc)
    prof = decay_profile(sol)
    fit = fit_decay(prof, rep.kappa_hat)
    out = _out(args)
    prof.to_csv(out / "decay_profile.csv")
    summary = {"solution": sol.to_json(), "kappa": rep.to_json(), "decay_fit": fit.to_json()}
    dump_json(summary, out / "summary.json")
    man.write(out)
    _emit(summary)
    return 0


def _surface_data(args, kind: str) -> int:
    A = _coefficients(args)
    disk = _disk(args)
    if disk is not None and args.evict:
        disk.clear()
    disc = _disc(args)
    man = RunManifest(f"{kind}-data", vars_json(args), A.digest())
    man.tolerances = {"krylov": args.tol}
    with man.stage("cell"):
        cell = CellData.cached(A, args.cell_resolution, kind == "neumann", args.tol, disk)
    store = LayerStore(disk)
    if args.surface:
        surf = ConvexSurface.from_csv(args.surface)
    else:
        surf = sample_boundary(args.semi_axes or [1.0] * A.d, args.count)
    base = data_preset(args.data, args.n_theta, A.d, A.m)
    out = _out(args)
    rows = []
    with man.stage("layers"):
        for x, nrm in zip(surf.points, surf.normals):
            rep = kappa(nrm, max(1, args.n_theta // 2))
            if rep.kappa_hat == 0:
                continue
            frame = build_frame(nrm)
            # slow modulation along the surface so the output is not a constant map
            scaled = (1 + 0.5 * x[0]) * base
            if kind == "dirichlet":
                val, trusted = dirichlet_data(cell, scaled, frame, disc, store)
            else:
                g = np.zeros((A.d, A.d) + base.shape)
                for l in range(A.d):
                    for r in range(l + 1, A.d):
                        g[l, r] = scaled
                val, trusted = neumann_data(cell, g, frame, disc, store)
            rows.append(BoundaryDataSample(x, nrm, rep.kappa_hat, val, trusted))
    d = A.d
    with open(out / f"{kind}_data.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        nval = rows[0].value.size if rows else 0
        w.writerow([f"x{i}" for i in range(d)] + [f"n{i}" for i in range(d)] + ["kappa_hat"] + [f"v{i}" for i in range(nval)] + ["trusted"])
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.row()])
    if disk is not None:
        man.cache = disk.stats()
    man.write(out)
    _emit({"points": len(rows), "cache": man.cache, "output": str(out / f"{kind}_data.csv")})
    return 0


def cmd_dirichlet_data(args) -> int:
    return _surface_data(args, "dirichlet")


def cmd_neumann_data(args) -> int:
    return _surface_data(args, "neumann")


def _sweep(args, kind: str) -> int:
    cfg = SweepConfig.from_dict(load_json(args.config))
    A = cfg.coefficients()
    disk = _disk(args)
    if disk is not None and args.evict:
        disk.clear()
    man = RunManifest(f"sweep-{kind}", cfg.to_json(), A.digest())
    man.tolerances = {"krylov": cfg.tol}
    with man.stage("cell"):
        cell = CellData.cached(A, cfg.cell_resolution, kind == "neumann", cfg.tol, disk)
    store = LayerStore(disk)
    with man.stage("sweep"):
        sweep = continuity_sweep_dirichlet if kind == "dirichlet" else continuity_sweep_neumann
        records = sweep(cfg, cell, store)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / "records.csv")
    write_plot_data(records, out / "plot_data.csv")
    summary: dict = {"records": len(records)}
    if len(records) >= 2:
        tr = fit_continuity(records, "trace_diff", cfg.slope_gate)
        dd = fit_continuity(records, "data_diff", cfg.slope_gate)
        summary.update(
            trace_fit=tr.to_json(),
            data_fit=dd.to_json(),
            gates={"trace_slope": tr.passed, "data_slope": dd.passed},
            kappa_fit=kappa_weighted_fit(records).to_json(),
            sigma_constants=sigma_constants(records, cfg.sigmas),
        )
    dump_json(summary, out / "summary.json")
    if disk is not None:
        man.cache = disk.stats()
    man.write(out)
    _emit(summary)
    return 0


def cmd_sweep_dirichlet(args) -> int:
    return _sweep(args, "dirichlet")


def cmd_sweep_neumann(args) -> int:
    return _sweep(args, "neumann")


def cmd_holder_fit(args) -> int:
    cfg = SweepConfig.from_dict(load_json(args.config))
    A = cfg.coefficients()
    disk = _disk(args)
    man = RunManifest("holder-fit", cfg.to_json(), A.digest())
    with man.stage("cell"):
        cell = CellData.cached(A, cfg.cell_resolution, False, cfg.tol, disk)
    with man.stage("fit"):
        rep = holder_fit(cfg, cell, LayerStore(disk))
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(rep.to_json(), out / "holder.json")
    man.write(out)
    _emit(rep.to_json())
    return 0


def _read_records(path: str) -> list[ContinuityRecord]:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError("records file is empty", field="records")
    header, body = rows[0], rows[1:]
    d = sum(1 for h in header if h.startswith("n1_"))
    out = []
    for r in body:
        v = [float(x) for x in r[: 2 * d + 4]]
        out.append(ContinuityRecord(np.array(v[:d]), np.array(v[d : 2 * d]), v[2 * d], v[2 * d + 1], v[2 * d + 2], v[2 * d + 3], r[-1]))
    return out


def cmd_kappa_fit(args) -> int:
    recs = _read_records(args.records)
    _emit(kappa_weighted_fit(recs, args.quantity).to_json())
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else EXIT_FAILURE


def vars_json(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def build_parser() -> ArgParser:
    p = ArgParser(prog="bltails", description="Boundary-layer tails and homogenized boundary data.")
    p.add_argument("--version", action="version", version=f"bltails {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=ArgParser)

    s = sub.add_parser("correctors", help="solve the cell problems and store the correctors")
    _coef_args(s)
    s.add_argument("--resolution", type=int, default=32)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out", default="bltails-out")
    s.set_defaults(func=cmd_correctors)

    s = sub.add_parser("homogenize", help="homogenized tensor and directional matrix")
    _coef_args(s)
    s.add_argument("--resolution", type=int, default=32)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--n", nargs="+", default=None)
    s.set_defaults(func=cmd_homogenize)

    s = sub.add_parser("flux", help="flux correctors of the adjoint and their residuals")
    _coef_args(s)
    s.add_argument("--resolution", type=int, default=32)
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_flux)

    s = sub.add_parser("kappa", help="box-truncated Diophantine constant of a normal")
    s.add_argument("--n", nargs="+", required=True)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--cutoff", type=int, default=32)
    s.set_defaults(func=cmd_kappa)

    s = sub.add_parser("kappa-stats", help="surface integral of kappa^-q over an ellipsoid")
    s.add_argument("--semi-axes", nargs="+", type=float, default=[1.0, 1.0])
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--cutoff", type=int, default=32)
    s.add_argument("--q", type=float, default=0.5)
    s.add_argument("--export", default=None, help="write the surface sample as CSV")
    s.set_defaults(func=cmd_kappa_stats)

    s = sub.add_parser("layer", help="solve one lifted boundary layer")
    _coef_args(s)
    _disc_args(s)
    s.add_argument("--n", nargs="+", default=["golden"])
    s.add_argument("--data", default="mixed", help="data preset, corrector:k,beta or flux:k,beta")
    s.add_argument("--kind", default="dirichlet", choices=["dirichlet", "neumann"])
    s.add_argument("--out", default="bltails-out")
    s.set_defaults(func=cmd_layer)

    for name, func in (("dirichlet-data", cmd_dirichlet_data), ("neumann-data", cmd_neumann_data)):
        s = sub.add_parser(name, help=f"homogenized {name.split('-')[0]} data on an ellipsoid sample")
        _coef_args(s)
        _disc_args(s)
        _cache_args(s)
        s.add_argument("--surface", default=None, help="surface sample CSV (from kappa-stats --export)")
        s.add_argument("--semi-axes", nargs="+", type=float, default=None)
        s.add_argument("--count", type=int, default=16)
        s.add_argument("--data", default="mixed")
        s.add_argument("--cell-resolution", type=int, default=16)
        s.add_argument("--out", default="bltails-out")
        s.set_defaults(func=func)

    for name, func in (("sweep-dirichlet", cmd_sweep_dirichlet), ("sweep-neumann", cmd_sweep_neumann)):
        s = sub.add_parser(name, help="continuity sweep over normal pairs")
        s.add_argument("--config", required=True)
        s.add_argument("--out", default=None)
        _cache_args(s)
        s.set_defaults(func=func)

    s = sub.add_parser("holder-fit", help="Hoelder exponent of the tail map and W^{1,p} norms")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    _cache_args(s)
    s.set_defaults(func=cmd_holder_fit)

    s = sub.add_parser("kappa-fit", help="regress continuity records on kappa")
    s.add_argument("--records", required=True)
    s.add_argument("--quantity", default="data_diff", choices=["data_diff", "trace_diff"])
    s.set_defaults(func=cmd_kappa_fit)

    s = sub.add_parser("selftest", help="run the built-in oracle checks")
    s.set_defaults(func=cmd_selftest)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return EXIT_CONFIG
    except BltailsError as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
