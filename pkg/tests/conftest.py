import numpy as np
import pytest

from bltails.periodic_fields import TrigTensor


def random_trig(seed: int, d: int = 2, m: int = 1, band: int = 2, scale: float = 0.3) -> TrigTensor:
    """Random band-limited tensor around the identity (not necessarily elliptic for large scale)."""
    rng = np.random.default_rng(seed)
    coeffs = {(0,) * d: np.einsum("ij,ab->ijab", np.eye(d), np.eye(m)).astype(complex)}
    for _ in range(3):
        k = tuple(int(v) for v in rng.integers(-band, band + 1, size=d))
        if not any(k):
            continue
        c = rng.normal(size=(d, d, m, m)) + 1j * rng.normal(size=(d, d, m, m))
        # drop a previous draw at -k so the mirror is completed from this one
        coeffs.pop(tuple(-v for v in k), None)
        coeffs[k] = scale * c / np.abs(c).sum()
    return TrigTensor(d, m, coeffs)


def grid(n: int, d: int = 2):
    th = np.arange(n) / n
    return np.meshgrid(*([th] * d), indexing="ij")


@pytest.fixture
def golden_normal():
    return np.array([1.0, np.sqrt(2.0)]) / np.sqrt(3.0)
