"""Named coefficient tensors and boundary data used by the CLI and the test suite."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .periodic_fields import TrigTensor

LAMINATE_CUTOFF = 16


def identity(d: int = 2, m: int = 1) -> TrigTensor:
    return TrigTensor.identity(d, m)


def laminate_series(b: float = 0.5, cutoff: int = LAMINATE_CUTOFF) -> dict[int, float]:
    """Fourier coefficients of 1/(1 + b cos(2 pi s)) truncated at |k| <= cutoff."""
    root = np.sqrt(1 - b * b)
    r = (root - 1) / b
    return {k: r ** abs(k) / root for k in range(-cutoff, cutoff + 1)}


def laminate(d: int = 2, b: float = 0.5, cutoff: int = LAMINATE_CUTOFF) -> TrigTensor:
    """Isotropic scalar laminate a(theta_1) I varying along the first axis only."""
    coeffs = {}
    eye = np.eye(d)[:, :, None, None]
    for k, c in laminate_series(b, cutoff).items():
        key = (k,) + (0,) * (d - 1)
        coeffs[key] = c * eye.astype(complex)
    return TrigTensor(d, 1, coeffs, lam=(1 - b) / (1 + b) * 0.999)


def smooth(d: int = 2, m: int = 1, skew: float = 0.0) -> TrigTensor:
    """Smooth variable tensor with modes along (1,0,..), (1,1,..) and (0,1,..).

    Symmetric unless ``skew`` is nonzero, which adds an antisymmetric part in
    the (i, j) indices. Eigenvalues of the symmetric part stay in [0.4, 1.6].
    """
    rng = np.random.default_rng(7 + 10 * d + m)

    def sym(scale: float) -> np.ndarray:
        X = rng.normal(size=(d * m, d * m))
        S = X + X.T
        S *= scale / np.abs(np.linalg.eigvalsh(S)).max()
        return S.reshape(d, m, d, m).transpose(0, 2, 1, 3)

    e = np.zeros(d, dtype=int)
    k1, k2, k3 = e.copy(), e.copy(), e.copy()
    k1[0] = 1
    k2[0] = k2[1] = 1
    k3[1] = 1
    base = np.einsum("ij,ab->ijab", np.eye(d), np.eye(m)).astype(complex)
    coeffs = {
        (0,) * d: base,
        tuple(k1): 0.5 * sym(0.3).astype(complex),
        tuple(k2): -0.5j * sym(0.2),
        tuple(k3): 0.5 * sym(0.1).astype(complex),
    }
    if skew:
        K = np.zeros((d, d, m, m))
        K[0, 1] = skew * np.eye(m)
        K[1, 0] = -skew * np.eye(m)
        coeffs[tuple(k1)] = coeffs[tuple(k1)] + 0.5 * K
    return TrigTensor(d, m, coeffs, lam=0.4)


PRESETS = {"identity": identity, "laminate": laminate, "smooth": smooth}


def coefficient_preset(name: str, d: int = 2, m: int = 1) -> TrigTensor:
    if name == "identity":
        return identity(d, m)
    if name == "laminate":
        if m != 1:
            raise ConfigError("the laminate preset is scalar (m = 1)", field="m")
        return laminate(d)
    if name == "smooth":
        return smooth(d, m)
    if name == "smooth-skew":
        return smooth(d, m, skew=0.2)
    raise ConfigError(f"unknown coefficient preset {name!r}", field="coefficient")


def trig_data(resolution: int, d: int, m: int, modes: list[tuple[tuple[int, ...], float, float]]) -> np.ndarray:
    """Real data sum a cos(2 pi k.theta) + b sin(2 pi k.theta), same in every component; shape (m, grid)."""
    axes = np.meshgrid(*([np.arange(resolution) / resolution] * d), indexing="ij")
    out = np.zeros((resolution,) * d)
    for k, a, b in modes:
        ph = 2 * np.pi * sum(ki * x for ki, x in zip(k, axes))
        out += a * np.cos(ph) + b * np.sin(ph)
    return np.broadcast_to(out, (m,) + out.shape).copy()


DATA_PRESETS = {
    "cos1": [((1,), 1.0, 0.0)],
    "mixed": [((1,), 1.0, 0.0), ((1, -2), 0.0, 0.3), ((0,), 0.7, 0.0)],
    "constant": [((0,), 1.0, 0.0)],
}


def data_preset(name: str, resolution: int, d: int, m: int = 1) -> np.ndarray:
    if name not in DATA_PRESETS:
        raise ConfigError(f"unknown data preset {name!r}", field="data")
    modes = [(tuple(list(k) + [0] * (d - len(k))), a, b) for k, a, b in DATA_PRESETS[name]]
    return trig_data(resolution, d, m, modes)
