import math

import numpy as np
import pytest


def random_params(rng):
    """(P, a1, b1, a2, b2) drawn uniformly from [0,1] x [0, 2 pi)^4."""
    return (float(rng.uniform()), *(float(x) for x in rng.uniform(0, 2 * math.pi, 4)))


def random_density(rng, dim=2):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_ket(rng, dim=2):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(rng, dim=2):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / abs(np.diag(r)))


def ad_capacity_oracle(lam, n=200001):
    """max_p H2((1 - lam) p) - H2(lam p) by brute force over p in [0, 1]."""
    p = np.linspace(0.0, 1.0, n)

    def h2(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
        return np.nan_to_num(out, nan=0.0)

    return float(max(np.max(h2((1 - lam) * p) - h2(lam * p)), 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
