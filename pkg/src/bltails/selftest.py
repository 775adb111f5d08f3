"""Quick oracle checks with closed-form answers, run by ``bltails selftest``."""

from __future__ import annotations

import numpy as np

from .boundary_layers import Discretization, solve_dirichlet_layer, solve_neumann_layer
from .cell_problems import homogenized_tensor, solve_correctors, solve_flux_correctors
from .geometry import build_frame, kappa, unit
from .homogenized_data import CellData, LayerStore, dirichlet_data
from .presets import identity, laminate, smooth


def _plane_wave(n: int, k) -> np.ndarray:
    th = np.arange(n) / n
    grid = np.meshgrid(th, th, indexing="ij")
    return np.cos(2 * np.pi * (k[0] * grid[0] + k[1] * grid[1]))


def check_identity_cell() -> tuple[bool, str]:
    A = identity(2, 1)
    chi = solve_correctors(A, 8)
    err = max(np.abs(chi.values).max(), np.abs(homogenized_tensor(A, chi).values - A.mean_value()).max())
    return err < 1e-12, f"max deviation {err:.2e}"


def check_laminate() -> tuple[bool, str]:
    A = laminate(2)
    ahat = homogenized_tensor(A, solve_correctors(A, 64)).values[:, :, 0, 0]
    # harmonic mean across the layers, arithmetic mean along them
    exact = np.diag([1.0, 1.0 / np.sqrt(1 - 0.25)])
    err = np.abs(ahat - exact).max()
    return err < 1e-8, f"error {err:.2e}"


def check_flux_antisymmetry() -> tuple[bool, str]:
    A = smooth(2, 1)
    flux = solve_flux_correctors(A, solve_correctors(A, 32))
    worst = max(flux.antisymmetry_residual, flux.divergence_residual)
    return worst < 1e-8, f"residual {worst:.2e}"


def check_kappa() -> tuple[bool, str]:
    rational = kappa(np.array([0.0, 1.0]), 16).kappa_hat
    n = unit([1.0, np.sqrt(2)])
    a, b = kappa(n, 16).kappa_hat, kappa(-n, 16).kappa_hat
    ok = rational == 0.0 and a > 0 and abs(a - b) < 1e-14 and kappa(n, 32).kappa_hat <= a
    return ok, f"rational {rational}, irrational {a:.4f}"


def check_frame() -> tuple[bool, str]:
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(20):
        M = build_frame(unit(rng.normal(size=3))).M
        worst = max(worst, np.abs(M.T @ M - np.eye(3)).max())
    return worst < 1e-13, f"orthogonality defect {worst:.2e}"


def check_dirichlet_plane_wave() -> tuple[bool, str]:
    n = unit([1.0, np.sqrt(2)])
    k = np.array([1, 0])
    sol = solve_dirichlet_layer(identity(2, 1), build_frame(n), _plane_wave(16, k)[None], Discretization(16, 30.0))
    rate = 2 * np.pi * np.linalg.norm(k - (k @ n) * n)
    exact = _plane_wave(16, k)[None] * np.exp(-rate * sol.t)[:, None, None]
    err = np.abs(sol.values[0] - exact).max()
    return err < 1e-7, f"max error {err:.2e}"


def check_neumann_plane_wave() -> tuple[bool, str]:
    n = unit([1.0, np.sqrt(2)])
    k = np.array([1, 0])
    tang = np.array([-n[1], n[0]])
    sol = solve_neumann_layer(identity(2, 1), build_frame(n), _plane_wave(16, k)[None], tang, Discretization(16, 30.0))
    rate = 2 * np.pi * np.linalg.norm(k - (k @ n) * n)
    th = np.arange(16) / 16
    sine = np.sin(2 * np.pi * th)[:, None] * np.ones(16)
    exact = -(2 * np.pi * (tang @ k) / rate) * sine[None] * np.exp(-rate * sol.t)[:, None, None]
    err = np.abs(sol.values[0] - exact).max()
    return err < 1e-7, f"max error {err:.2e}"


def check_constant_data() -> tuple[bool, str]:
    A = smooth(2, 1)
    cell = CellData.compute(A, 16, with_flux=False)
    f = np.full((1, 16, 16), 1.5)
    val, _ = dirichlet_data(cell, f, build_frame(unit([1.0, np.sqrt(2)])), Discretization(16, 40.0), LayerStore())
    err = float(np.abs(np.ravel(val) - 1.5).max())
    return err < 1e-6, f"error {err:.2e}"


CHECKS = [
    ("identity cell problem", check_identity_cell),
    ("laminate homogenized tensor", check_laminate),
    ("flux corrector residuals", check_flux_antisymmetry),
    ("diophantine constant", check_kappa),
    ("frame orthogonality", check_frame),
    ("dirichlet plane wave", check_dirichlet_plane_wave),
    ("neumann plane wave", check_neumann_plane_wave),
    ("constant dirichlet data", check_constant_data),
]


def run_selftest() -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in CHECKS:
        ok, detail = fn()
        out.append((name, bool(ok), detail))
    return out
