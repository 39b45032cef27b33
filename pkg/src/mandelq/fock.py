"""Truncated two-mode Fock space.

Basis ordering is fixed: ``index(n1, n2) = n1 * (n_max + 1) + n2``, so an
operator acting on mode 1 is ``kron(op, I)`` and on mode 2 ``kron(I, op)``.
All operators are dense complex ``numpy`` arrays; state vectors are 1-D arrays
and density matrices are 2-D arrays of the same dimension.

Single-mode helpers (``*_mode`` functions) work on one factor of a product
state and accept much larger cutoffs than the joint space can afford.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import (
    ConvergenceFailure,
    CutoffTooSmall,
    DimensionMismatch,
    InvalidTemperature,
    InvalidWeight,
)

TAIL_TOL = 1e-12
UNITARITY_TOL = 1e-8
PAD_TOL = 1e-8
MAX_PAD_RETRIES = 3

_RNG_LOCK = threading.Lock()


@dataclass(frozen=True)
class Cutoff:
    """Photon-number cutoff per mode plus exponentiation padding."""

    n_max: int
    pad: int = 8

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")
        if int(self.pad) != self.pad or self.pad < 0:
            raise ValueError(f"pad must be a non-negative integer, got {self.pad}")

    @property
    def levels(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.levels**2

    def index(self, n1: int, n2: int) -> int:
        if not (0 <= n1 <= self.n_max and 0 <= n2 <= self.n_max):
            raise DimensionMismatch(f"|{n1},{n2}> outside cutoff n_max={self.n_max}")
        return n1 * self.levels + n2


def default_pad(a: float, b: float) -> int:
    return max(8, math.ceil(4 * (abs(a) + abs(b))) * 2)


def cutoff_from_dim(dim: int) -> Cutoff:
    levels = math.isqrt(dim)
    if levels * levels != dim or levels < 2:
        raise DimensionMismatch(f"dimension {dim} is not (n_max+1)^2 with n_max >= 1")
    return Cutoff(levels - 1)


# ---------------------------------------------------------------- operators


def annihilation(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels, dtype=float)), 1).astype(complex)


def ladder_operators(cutoff: Cutoff) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation operators ``(a1, a2)``; creation operators are their adjoints."""
    a = annihilation(cutoff.levels)
    eye = np.eye(cutoff.levels)
    return np.kron(a, eye), np.kron(eye, a)


def _dag(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def number_conserving_generators(cutoff: Cutoff):
    """``(J0, J1, J2, J3)``: the U(2) generators built from ladder products."""
    a1, a2 = ladder_operators(cutoff)
    n1 = _dag(a1) @ a1
    n2 = _dag(a2) @ a2
    j0 = 0.5 * (n1 + n2 + np.eye(cutoff.dim))
    j1 = 0.5 * (_dag(a1) @ a2 + _dag(a2) @ a1)
    j2 = 0.5j * (_dag(a2) @ a1 - _dag(a1) @ a2)
    j3 = 0.5 * (n1 - n2)
    return j0, j1, j2, j3


def noncompact_generators(cutoff: Cutoff):
    """``(K1, K2, K3, L1, L2, L3)``: the six number non-conserving generators."""
    a1, a2 = ladder_operators(cutoff)
    c1, c2 = _dag(a1), _dag(a2)
    c1c1, a1a1 = c1 @ c1, a1 @ a1
    c2c2, a2a2 = c2 @ c2, a2 @ a2
    k1 = 0.25 * (c1c1 + a1a1 - c2c2 - a2a2)
    k2 = -0.25j * (c1c1 - a1a1 + c2c2 - a2a2)
    k3 = -0.5 * (c1 @ c2 + a1 @ a2)
    l1 = 0.25j * (c1c1 - a1a1 - c2c2 + a2a2)
    l2 = 0.25 * (c1c1 + a1a1 + c2c2 + a2a2)
    l3 = -0.5j * (c1 @ c2 - a1 @ a2)
    return k1, k2, k3, l1, l2, l3


def truncation_safe_mask(cutoff: Cutoff, max_total: int) -> np.ndarray:
    """Boolean mask over the basis selecting ``n1 + n2 <= max_total``."""
    n = np.arange(cutoff.levels)
    return (n[:, None] + n[None, :] <= max_total).ravel()


# ------------------------------------------------------------ single mode


def coherent_amplitudes(z: complex, levels: int) -> np.ndarray:
    """Unnormalised-by-truncation coherent amplitudes ``e^{-|z|^2/2} z^n / sqrt(n!)``."""
    n = np.arange(levels)
    r = abs(z)
    if r == 0:
        out = np.zeros(levels, complex)
        out[0] = 1.0
        return out
    logmag = n * math.log(r) - 0.5 * gammaln(n + 1) - 0.5 * r * r
    return np.exp(logmag) * np.exp(1j * n * np.angle(z))


def poisson_tail(mean: float, n_max: int) -> float:
    """Weight of a Poisson distribution above ``n_max``."""
    if mean == 0:
        return 0.0
    return float(poisson.sf(n_max, mean))


def coherent_levels(z: complex, floor: int = 2, tol: float = TAIL_TOL) -> int:
    """Smallest cutoff (``n_max``) whose Poisson tail is below ``tol``."""
    mean = abs(z) ** 2
    n_max = max(floor, math.ceil(mean + 8 * math.sqrt(mean)))
    while poisson_tail(mean, n_max) >= tol:
        n_max += max(1, n_max // 8)
    return n_max


def _squeeze_generator(r: float, levels: int) -> sparse.csr_matrix:
    """Sparse ``(r/2)(a^dag^2 - a^2)`` on ``levels`` levels."""
    n = np.arange(levels - 2)
    amp = np.sqrt((n + 1.0) * (n + 2.0))
    a2 = sparse.diags(amp, 2, shape=(levels, levels), format="csr")
    return (0.5 * r) * (a2.T - a2).astype(complex)


def squeeze_mode(r: float, levels: int, pad: int) -> np.ndarray:
    """Dense single-mode ``exp((r/2)(a^dag^2 - a^2))`` projected onto ``levels`` levels.

    The exponential is taken on ``levels + pad`` levels. The pad doubles until
    the projected block moves by less than ``PAD_TOL``, at most
    ``MAX_PAD_RETRIES`` times. The projection itself is not unitary: columns
    near the top lose weight above the cutoff.
    """
    if r == 0:
        return np.eye(levels, dtype=complex)
    prev = None
    for _ in range(MAX_PAD_RETRIES + 2):
        u = linalg.expm(_squeeze_generator(r, levels + pad).toarray())[:levels, :levels]
        if prev is not None:
            change = float(np.max(np.abs(u - prev)))
            if change < PAD_TOL:
                return u
        prev = u
        pad *= 2
    raise ConvergenceFailure(f"squeeze r={r}: projected block still moves by {change:.2e} after pad growth")


def padded_squeeze_operator(a: float, b: float, cutoff: Cutoff) -> tuple[np.ndarray, Cutoff]:
    """Two-mode squeeze exponentiated on ``n_max + pad`` levels per mode, without projection.

    Returns the operator and the enlarged cutoff it acts on. The result is
    checked for unitarity on states with ``n1 + n2 <= n_max / 2``.
    """
    big = Cutoff(cutoff.n_max + cutoff.pad, 0)
    s1 = linalg.expm(_squeeze_generator(0.5 * (a - b), big.levels).toarray())
    s2 = linalg.expm(_squeeze_generator(0.5 * (a + b), big.levels).toarray())
    u = np.kron(s1, s2)
    cols = u[:, truncation_safe_mask(big, cutoff.n_max // 2)]
    defect = float(np.max(np.abs(_dag(cols) @ cols - np.eye(cols.shape[1]))))
    if defect >= UNITARITY_TOL:
        raise ConvergenceFailure(f"squeeze ({a}, {b}): unitarity defect {defect:.2e}")
    return u, big


def squeeze_vectors(r: float, columns: np.ndarray) -> np.ndarray:
    """Apply the single-mode squeeze to the columns of ``columns`` (shape ``levels x k``).

    Uses the action of the sparse generator, so no dense exponential is formed.
    The caller supplies enough levels; the result is checked for weight near the
    top of the space.
    """
    if r == 0:
        return np.array(columns, dtype=complex)
    levels = columns.shape[0]
    gen = _squeeze_generator(r, levels).tocsc()
    # expm_multiply picks its step count with a randomised norm estimate drawn
    # from the global numpy RNG; pin it so results do not depend on call history
    with _RNG_LOCK:
        saved = np.random.get_state()
        np.random.seed(0)
        try:
            return expm_multiply(gen, columns.astype(complex))
        finally:
            np.random.set_state(saved)


def top_weight(vec: np.ndarray, width: int = 4) -> float:
    """Probability carried by the highest ``width`` levels of a single-mode vector/columns."""
    v = np.atleast_2d(vec.T).T if vec.ndim == 1 else vec
    return float(np.max(np.sum(np.abs(v[-width:]) ** 2, axis=0)))


# ---------------------------------------------------------------- two mode


def _check_tail(tail: float, what: str):
    if tail >= TAIL_TOL:
        raise CutoffTooSmall(f"{what}: truncated tail weight {tail:.3e} >= {TAIL_TOL:g}")


def coherent_state(z1: complex, z2: complex, cutoff: Cutoff) -> np.ndarray:
    """Two-mode coherent state ``|z1, z2>`` renormalised after truncation."""
    p1 = poisson_tail(abs(z1) ** 2, cutoff.n_max)
    p2 = poisson_tail(abs(z2) ** 2, cutoff.n_max)
    _check_tail(1 - (1 - p1) * (1 - p2), f"coherent state ({z1}, {z2})")
    psi = np.kron(coherent_amplitudes(z1, cutoff.levels), coherent_amplitudes(z2, cutoff.levels))
    return psi / np.linalg.norm(psi)


def fock_state(n1: int, n2: int, cutoff: Cutoff) -> np.ndarray:
    psi = np.zeros(cutoff.dim, complex)
    psi[cutoff.index(n1, n2)] = 1.0
    return psi


def thermal_weights(beta: float, levels: int) -> np.ndarray:
    """Single-mode geometric weights ``(1 - e^-beta) e^{-beta n}``, tail checked, renormalised."""
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidTemperature(f"beta must be finite and > 0, got {beta}")
    tail = math.exp(-beta * levels)
    _check_tail(1 - (1 - tail) ** 2, f"thermal state beta={beta}")
    w = np.exp(-beta * np.arange(levels))
    return w / w.sum()


def thermal_levels(beta: float, floor: int = 2) -> int:
    if not beta > 0:
        raise InvalidTemperature(f"beta must be > 0, got {beta}")
    # 1 - (1 - e^{-beta L})^2 ~ 2 e^{-beta L}
    return max(floor, math.ceil(math.log(2 / TAIL_TOL) / beta) + 1) - 1


def thermal_density(beta: float, cutoff: Cutoff) -> np.ndarray:
    """Isotropic two-mode thermal state ``(1-e^-beta)^2 exp(-beta N)``."""
    w = thermal_weights(beta, cutoff.levels)
    return np.diag(np.kron(w, w)).astype(complex)


def superposition_norm_sq(u1, u2, v1, v2, r, eta) -> float:
    overlap = math.exp(-0.5 * (u1 * u1 + u2 * u2 + v1 * v1 + v2 * v2) + u1 * v1 + u2 * v2)
    return 1 + r * r + 2 * r * math.cos(eta) * overlap


def superposition_state(u1, u2, v1, v2, r, eta, cutoff: Cutoff) -> np.ndarray:
    """``(|u1,u2> + r e^{i eta} |v1,v2>) / N`` for real displacements."""
    if r < 0:
        raise InvalidWeight(f"relative weight r must be >= 0, got {r}")
    psi = coherent_state(u1, u2, cutoff)
    if r:
        psi = psi + r * np.exp(1j * eta) * coherent_state(v1, v2, cutoff)
    norm = np.linalg.norm(psi)
    if norm < 1e-14:
        raise InvalidWeight("superposition cancels to the zero vector")
    return psi / norm


def squeeze_operator(a: float, b: float, cutoff: Cutoff) -> np.ndarray:
    """Two-mode squeeze representative as the product of its single-mode factors.

    Mode 1 is squeezed with strength ``(a - b)/2`` and mode 2 with ``(a + b)/2``,
    i.e. ``exp(((a-b)/4)(a1^dag^2 - a1^2)) exp(((a+b)/4)(a2^dag^2 - a2^2))``.
    """
    pad = max(cutoff.pad, default_pad(a, b))
    s1 = squeeze_mode(0.5 * (a - b), cutoff.levels, pad)
    s2 = squeeze_mode(0.5 * (a + b), cutoff.levels, pad)
    return np.kron(s1, s2)


def apply_squeeze(x: np.ndarray, a: float, b: float, cutoff: Cutoff | None = None) -> np.ndarray:
    """Multiply a vector or conjugate a density matrix by the squeeze representative."""
    cutoff = cutoff or cutoff_from_dim(x.shape[0])
    if x.shape[0] != cutoff.dim:
        raise DimensionMismatch(f"state dimension {x.shape[0]} != {cutoff.dim}")
    u = squeeze_operator(a, b, cutoff)
    if x.ndim == 1:
        return u @ x
    return u @ x @ _dag(u)


def expectation(x: np.ndarray, op: np.ndarray) -> complex:
    """``<psi|op|psi>`` for vectors, ``Tr(rho op)`` for density matrices."""
    if op.shape[0] != x.shape[0] or op.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"operator {op.shape} does not act on state of dim {x.shape[0]}")
    if x.ndim == 1:
        return complex(np.vdot(x, op @ x))
    return complex(np.einsum("ij,ji->", x, op))
