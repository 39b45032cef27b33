import numpy as np
import pytest
from scipy import linalg

from mandelq import fock
from mandelq.fock import Cutoff
from mandelq.states import ExplicitDensityMatrix


def random_density(rng, n_max, rank=3, max_total=None):
    """Random mixed state, optionally supported on ``n1 + n2 <= max_total``."""
    cutoff = Cutoff(n_max)
    mask = np.ones(cutoff.dim, bool) if max_total is None else fock.truncation_safe_mask(cutoff, max_total)
    vecs = np.zeros((cutoff.dim, rank), complex)
    vecs[mask] = rng.normal(size=(mask.sum(), rank)) + 1j * rng.normal(size=(mask.sum(), rank))
    w = rng.dirichlet(np.ones(rank))
    rho = (vecs * w) @ vecs.conj().T
    rho /= np.trace(rho).real
    return ExplicitDensityMatrix(cutoff, 0.5 * (rho + rho.conj().T))


def random_hermitian2(rng):
    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return 0.5 * (h + h.conj().T)


def fock_rotation(h, cutoff):
    """Fock-space image of the mode transform ``expm(-i h)``, exact on fixed total number."""
    a = fock.ladder_operators(cutoff)
    gen = sum(h[r, s] * a[r].conj().T @ a[s] for r in range(2) for s in range(2))
    return linalg.expm(-1j * gen)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def sphere_objective(sq):
    """Vectorised ``f(theta, phi)`` for a SphereQuadratic."""

    def f(theta, phi):
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        q = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], -1)
        return sq.scale * (np.einsum("...i,ij,...j->...", q, sq.A, q) + q @ sq.b + sq.c)

    return f
