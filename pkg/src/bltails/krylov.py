"""Preconditioned Krylov solves with residual bookkeeping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import SolverError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAXITER = 10000


@dataclass
class KrylovResult:
    x: np.ndarray
    iterations: int
    residual: float
    history: list[float] = field(default_factory=list)


def pcg(apply: Callable, b: np.ndarray, precond: Callable, tol: float, maxiter: int) -> KrylovResult:
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return KrylovResult(x, 0, 0.0, [0.0])
    r = b.copy()
    z = precond(r)
    p = z.copy()
    rz = r @ z
    hist = [1.0]
    for it in range(1, maxiter + 1):
        Ap = apply(p)
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverError("operator not positive definite along search direction", hist)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rel = np.linalg.norm(r) / bnorm
        hist.append(float(rel))
        if rel <= tol:
            return KrylovResult(x, it, rel, hist)
        z = precond(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"PCG did not reach {tol:g} in {maxiter} iterations (last {hist[-1]:.3e})", hist)


def solve(
    apply: Callable,
    b: np.ndarray,
    precond: Callable,
    symmetric: bool,
    tol: float = DEFAULT_TOL,
    maxiter: int = DEFAULT_MAXITER,
) -> KrylovResult:
    """Solve apply(x) = b to relative residual tol.

    Symmetric positive problems use PCG; the rest use restarted GMRES with the
    preconditioner on the right. The returned residual is recomputed from x.
    """
    if symmetric:
        res = pcg(apply, b, precond, tol, maxiter)
    else:
        n = b.size
        bnorm = np.linalg.norm(b)
        if bnorm == 0:
            return KrylovResult(np.zeros_like(b), 0, 0.0, [0.0])
        A = LinearOperator((n, n), matvec=apply, dtype=float)
        Minv = LinearOperator((n, n), matvec=precond, dtype=float)
        hist: list[float] = [1.0]
        x, info = gmres(
            A,
            b,
            rtol=tol,
            atol=0.0,
            restart=60,
            maxiter=max(1, maxiter // 60),
            M=Minv,
            callback=lambda rn: hist.append(float(rn)),
            callback_type="pr_norm",
        )
        rel = float(np.linalg.norm(b - apply(x)) / bnorm)
        if info != 0 and rel > tol:
            raise SolverError(f"GMRES did not reach {tol:g} (info={info}, residual {rel:.3e})", hist)
        res = KrylovResult(x, len(hist) - 1, rel, hist)
    log.debug("krylov: %d iterations, residual %.3e", res.iterations, res.residual)
    return res
