"""Acceptance gates. Each test prints one PASS/FAIL line with the measured numbers."""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from bltails.boundary_layers import Discretization, decay_profile, fit_decay, fit_exponential, solve_dirichlet_layer
from bltails.cell_problems import homogenized_tensor, solve_correctors, solve_flux_correctors
from bltails.experiments import SweepConfig, continuity_sweep_dirichlet, continuity_sweep_neumann, fit_continuity, holder_fit, write_records
from bltails.geometry import build_frame, kappa, kappa_statistics, sample_boundary, unit
from bltails.homogenized_data import CellData, LayerStore, corrector_layers, dirichlet_data, flux_layers, neumann_data, tail_map
from bltails.oracles import strip_dirichlet
from bltails.presets import data_preset, identity, laminate, laminate_series, smooth

from conftest import grid

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, runtime, limit):
        ok = bool(ok) and runtime < limit
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number} {title}: {detail}; {runtime:.1f}s (limit {limit:.0f}s)")
        assert ok, detail

    return emit


def test_1_constant_coefficient_collapse(report):
    t0 = time.perf_counter()
    worst = 0.0
    for d, m in ((2, 1), (2, 2), (3, 1)):
        N = 8
        A = identity(d, m)
        cell = CellData.compute(A, N)
        worst = max(worst, np.abs(cell.chistar.values).max(), np.abs(cell.flux.values).max())
        exact_ahat = np.array_equal(cell.ahat.values, A.mean_value())
        n = unit([1.0, np.sqrt(2.0), np.sqrt(3.0)][:d])
        disc = Discretization(N, 20.0)
        store = LayerStore()
        for layers in (corrector_layers(cell, build_frame(n), disc, store), flux_layers(cell, build_frame(n), disc, store)):
            worst = max(worst, max(np.abs(s.values).max() for s in layers.values()))
        th = grid(N, d)
        f = np.stack([np.cos(2 * np.pi * th[0]) + 0.3 * (b + 1) + 0.2 * np.sin(2 * np.pi * th[-1]) for b in range(m)])
        fbar, _ = dirichlet_data(cell, f, build_frame(n), disc, store)
        fb_err = float(np.abs(fbar - f.mean(axis=tuple(range(1, d + 1)))).max())
        if not exact_ahat:
            break
    ok = worst <= 1e-10 and exact_ahat and fb_err <= 1e-8
    detail = f"max corrector/flux/layer {worst:.1e}, ahat exact {exact_ahat}, fbar-mean {fb_err:.1e}"
    report(1, "constant-coefficient collapse", ok, detail, time.perf_counter() - t0, 60)


def test_2_laminate_oracle(report):
    t0 = time.perf_counter()
    A = laminate(2)
    ahat = homogenized_tensor(A, solve_correctors(A, 64)).values[:, :, 0, 0]
    coeffs = laminate_series(0.5)
    profile = lambda s: sum(c * math.cos(2 * math.pi * k * s) for k, c in coeffs.items())
    harmonic = 1 / quad(lambda s: 1 / profile(s), 0, 1, epsabs=1e-14, limit=200)[0]
    arithmetic = quad(profile, 0, 1, epsabs=1e-14, limit=200)[0]
    e11, e22 = abs(ahat[0, 0] - harmonic), abs(ahat[1, 1] - arithmetic)
    off = max(abs(ahat[0, 1]), abs(ahat[1, 0]))
    report(2, "laminate oracle", max(e11, e22, off) <= 1e-6, f"|a11-harm| {e11:.1e}, |a22-arith| {e22:.1e}, offdiag {off:.1e}", time.perf_counter() - t0, 60)


def test_3_analytic_lifted_solution(report):
    t0 = time.perf_counter()
    N = 64
    n = unit([1.0, np.sqrt(2.0)])
    t1, t2 = grid(N)
    worst = 0.0
    for k in ((1, 0), (2, -3), (1, 1)):
        phi = np.cos(2 * np.pi * (k[0] * t1 + k[1] * t2))
        s = solve_dirichlet_layer(identity(2), build_frame(n), phi, Discretization(N, 20.0))
        kv = np.asarray(k, dtype=float)
        rate = 2 * np.pi * np.linalg.norm(kv - (kv @ n) * n)
        exact = phi[None] * np.exp(-rate * s.t)[:, None, None]
        worst = max(worst, float(np.abs(s.values[0] - exact).max()))
    report(3, "analytic lifted solution N=64", worst <= 1e-6, f"max error {worst:.2e}", time.perf_counter() - t0, 300)


def test_4_rational_normal_strip_oracle(report):
    t0 = time.perf_counter()
    N, T = 16, 20.0
    A = smooth(2, 1)
    fr = build_frame(np.array([0.0, 1.0]))
    phi = data_preset("mixed", N, 2)
    s = solve_dirichlet_layer(A, fr, phi, Discretization(N, T))
    ref = strip_dirichlet(A.adjoint(), fr, phi, T / 2, 96)
    mask = s.t <= T / 2
    err = float(np.abs(s.values[:, mask] - ref.at(s.t[mask])).max())
    rate, r2 = fit_exponential(decay_profile(s), 0.0, T / 2)
    detail = f"max error on [0, T/2] {err:.2e}, exponential rate {rate:.3f}, R^2 {r2:.5f}"
    report(4, "rational-normal strip oracle", err <= 1e-5 and r2 >= 0.99, detail, time.perf_counter() - t0, 600)


def test_5_decay_law(report):
    t0 = time.perf_counter()
    N, T = 16, 200.0
    A = smooth(2, 1)
    phi = data_preset("mixed", N, 2)
    kaps, slopes = [], []
    for ang in (np.pi / 4 + 0.01, 0.3, 1.0):
        n = np.array([np.cos(ang), np.sin(ang)])
        rep = kappa(n, N // 2)
        s = solve_dirichlet_layer(A, build_frame(n), phi, Discretization(N, T), kappa_report=rep)
        fit = fit_decay(decay_profile(s), rep.kappa_hat)
        kaps.append(rep.kappa_hat)
        slopes.append(fit.slope_kappa)
    span = np.log10(max(kaps) / min(kaps))
    ok = span >= 1 and all(sl <= -2 for sl in slopes)
    detail = f"kappa {[round(k, 4) for k in kaps]} ({span:.2f} decades), slopes vs (1+kappa t) {[round(v, 2) for v in slopes]}"
    report(5, "decay law", ok, detail, time.perf_counter() - t0, 1800)


def test_6_continuity_modulus(report):
    t0 = time.perf_counter()
    cfg = SweepConfig(
        coefficient="smooth",
        normals=[[0.5, 0.8660254037844386]],
        deltas=[0.1, 0.03, 0.01],
        kappa_band=[0.2, 0.8],
        n_theta=16,
        T=60,
        cell_resolution=16,
    )
    cell = CellData.compute(cfg.coefficients(), cfg.cell_resolution, with_flux=True)
    store = LayerStore()
    dirichlet = continuity_sweep_dirichlet(cfg, cell, store)
    neumann = continuity_sweep_neumann(cfg, cell, store)
    sd = fit_continuity(dirichlet, "trace_diff").slope
    sn = fit_continuity(neumann, "trace_diff").slope
    band = [round(r.kappa, 3) for r in dirichlet + neumann]
    ok = len(dirichlet) == 3 and len(neumann) == 3 and sd >= 0.9 and sn >= 0.9
    detail = f"dirichlet trace slope {sd:.3f}, neumann trace slope {sn:.3f}, kappa in band {min(band)}..{max(band)}"
    report(6, "continuity modulus", ok, detail, time.perf_counter() - t0, 3600)


def test_7_holder_and_sobolev(report):
    t0 = time.perf_counter()
    cfg = SweepConfig(coefficient="smooth", n_theta=16, T=60, cell_resolution=16, surface={"count": 80})
    rep = holder_fit(cfg, min_samples=50)
    rel = {p: abs(rep.lp[p] - rep.lp_doubled[p]) / rep.lp_doubled[p] for p in rep.lp}
    ok = rep.trusted >= 50 and rep.alpha_hat is not None and rep.alpha_hat >= 0.8 and rep.lp_stable
    detail = f"{rep.trusted} trusted normals, alpha_hat {rep.alpha_hat:.3f}, L^p drift under doubling " + ", ".join(
        f"p={p}: {v:.1%}" for p, v in rel.items()
    )
    report(7, "Hoelder / W^{1,p} gate", ok, detail, time.perf_counter() - t0, 7200)


def test_8_kappa_integrability(report):
    t0 = time.perf_counter()
    rows = []
    ok = True
    for d, q in ((2, 0.5), (3, 1.5)):
        base = kappa_statistics(sample_boundary([1.0] * d, 2000), 16, q).value
        finer_cut = kappa_statistics(sample_boundary([1.0] * d, 2000), 32, q).value
        finer_pts = kappa_statistics(sample_boundary([1.0] * d, 4000), 16, q).value
        drift = max(abs(finer_cut - base), abs(finer_pts - base)) / base
        ok &= bool(np.isfinite(base) and drift <= 0.2)
        rows.append(f"d={d} q={q}: {base:.3f} (drift {drift:.1%})")
    report(8, "kappa integrability", ok, "; ".join(rows), time.perf_counter() - t0, 600)


def test_9_invariance_suite(report, tmp_path):
    t0 = time.perf_counter()
    N = 16
    disc = Discretization(N, 40.0)
    A = smooth(2, 1, skew=0.2)
    cell = CellData.compute(A, N)
    n = unit([0.3, 0.7 * np.sqrt(3.0)])
    phi = data_preset("mixed", N, 2)

    # frame independence of V and of tails
    a = solve_dirichlet_layer(A, build_frame(n, 0), phi, disc)
    b = solve_dirichlet_layer(A, build_frame(n, 1), phi, disc)
    ta = tail_map(A, n, phi, disc, frame=build_frame(n, 0)).value
    tb = tail_map(A, n, phi, disc, frame=build_frame(n, 1)).value
    frame_err = float(max(np.abs(a.values - b.values).max(), np.abs(ta - tb).max()))

    # superposition of fbar and gbar
    store = LayerStore()
    fr = build_frame(n)
    p, q = data_preset("cos1", N, 2), phi
    fp, fq = dirichlet_data(cell, p, fr, disc, store)[0], dirichlet_data(cell, q, fr, disc, store)[0]
    f_lin = float(np.abs(dirichlet_data(cell, 2 * p - 3 * q, fr, disc, store)[0] - (2 * fp - 3 * fq)).max())
    gp = np.zeros((2, 2, 1, N, N))
    gq = np.zeros((2, 2, 1, N, N))
    gp[0, 1], gq[0, 1], gq[1, 0] = p, q, 0.5 * p
    Gp, Gq = neumann_data(cell, gp, fr, disc, store)[0], neumann_data(cell, gq, fr, disc, store)[0]
    g_lin = float(np.abs(neumann_data(cell, 2 * gp - 3 * gq, fr, disc, store)[0] - (2 * Gp - 3 * Gq)).max())

    # constant data homogenizes to itself
    const_err = float(abs(dirichlet_data(cell, np.full((1, N, N), 1.25), fr, disc, store)[0][0] - 1.25))

    # bit-identical reruns from an empty cache
    cfg = SweepConfig(coefficient="smooth", normals=[[0.5, 0.8660254037844386]], deltas=[0.1, 0.03], n_theta=8, T=30, cell_resolution=8)
    for i in range(2):
        write_records(continuity_sweep_dirichlet(cfg), tmp_path / f"r{i}.csv")
    identical = (tmp_path / "r0.csv").read_bytes() == (tmp_path / "r1.csv").read_bytes()

    ok = frame_err <= 1e-8 and f_lin <= 1e-10 and g_lin <= 1e-10 and const_err <= 1e-5 and identical
    detail = f"frame {frame_err:.1e}, fbar linearity {f_lin:.1e}, gbar linearity {g_lin:.1e}, constant data {const_err:.1e}, bit-identical {identical}"
    report(9, "invariance suite", ok, detail, time.perf_counter() - t0, 900)
