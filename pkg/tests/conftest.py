import numpy as np
import pytest

from geomaxent.core import validate_density

# benchmark qubit used throughout: eigenvalues 0.5 -+ sqrt(0.1325)
BENCH = np.array([[0.45, 0.2 - 0.3j], [0.2 + 0.3j, 0.55]])


def haar_unitary(rng, D):
    g = (rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(rng, D, spread=None, offset=0.0):
    """Haar-rotated diagonal; eigenvalues uniform on [offset, offset + spread]."""
    if spread is None:
        a = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
        return 0.5 * (a + a.conj().T)
    u = haar_unitary(rng, D)
    l = offset + spread * rng.random(D)
    return (u * l) @ u.conj().T


def random_density(rng, D, floor=0.03):
    """Haar-rotated density with Dirichlet spectrum bounded below by ``floor``."""
    r = floor + (1 - D * floor) * rng.dirichlet(np.ones(D))
    u = haar_unitary(rng, D)
    rho = (u * r) @ u.conj().T
    return validate_density(0.5 * (rho + rho.conj().T))


@pytest.fixture
def bench():
    return validate_density(BENCH)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
