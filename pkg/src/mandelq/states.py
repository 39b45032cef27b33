"""Two-mode states: the parametric families plus user-supplied density matrices.

Every family can be *realized* numerically in one of three forms:

* ``JointPure``: amplitude array ``psi[n1, n2]`` (possibly rectangular),
* ``JointMixed``: density matrix on the square two-mode space,
* ``ProductMixed``: single-mode densities ``rho1 (x) rho2``.

Product families (squeezed coherent, squeezed thermal, Fock) are realized mode
by mode at their own convergent cutoffs, which keeps strongly squeezed or
strongly displaced states affordable. Passing an explicit :class:`Cutoff`
forces a joint realization on the square ``(n_max+1)^2`` space.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import fock
from .errors import CutoffTooSmall, InvalidParameter, InvalidTemperature, InvalidWeight, ParseError, ValidationError
from .fock import Cutoff

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8
MAX_MODE_LEVELS = 20000


def _finite(**values):
    for name, val in values.items():
        if not np.all(np.isfinite(val)):
            raise InvalidParameter(f"{name} must be finite, got {val}")


@dataclass(frozen=True)
class SqueezedCoherent:
    """``U0(a, b) |z1, z2>`` with complex displacements and real squeeze factors."""

    z1: complex
    z2: complex
    a: float
    b: float

    def __post_init__(self):
        _finite(z1=self.z1, z2=self.z2, a=self.a, b=self.b)
        if self.a < 0 or self.b < 0:
            raise InvalidParameter(f"squeeze factors must be >= 0, got a={self.a}, b={self.b}")

    @property
    def squeezes(self) -> tuple[float, float]:
        return 0.5 * (self.a - self.b), 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class SqueezedThermal:
    """``U0(a, b) rho0(beta) U0(a, b)^dag`` with ``beta = hbar omega / kT``."""

    beta: float
    a: float
    b: float

    def __post_init__(self):
        _finite(beta=self.beta, a=self.a, b=self.b)
        if not self.beta > 0:
            raise InvalidTemperature(f"beta must be > 0, got {self.beta}")
        if self.a < 0 or self.b < 0:
            raise InvalidParameter(f"squeeze factors must be >= 0, got a={self.a}, b={self.b}")

    @property
    def squeezes(self) -> tuple[float, float]:
        return 0.5 * (self.a - self.b), 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class CoherentSuperposition:
    """``(|u1,u2> + r e^{i eta} |v1,v2>) / N`` with real displacements."""

    u1: float
    u2: float
    v1: float
    v2: float
    r: float
    eta: float

    def __post_init__(self):
        _finite(u1=self.u1, u2=self.u2, v1=self.v1, v2=self.v2, r=self.r, eta=self.eta)
        if self.r < 0:
            raise InvalidWeight(f"relative weight r must be >= 0, got {self.r}")

    @property
    def norm_sq(self) -> float:
        return fock.superposition_norm_sq(self.u1, self.u2, self.v1, self.v2, self.r, self.eta)


@dataclass(frozen=True)
class Fock:
    n1: int
    n2: int

    def __post_init__(self):
        if int(self.n1) != self.n1 or int(self.n2) != self.n2 or self.n1 < 0 or self.n2 < 0:
            raise InvalidParameter(f"Fock numbers must be non-negative integers, got ({self.n1}, {self.n2})")


@dataclass(frozen=True, eq=False)
class ExplicitDensityMatrix:
    """A density matrix on the truncated two-mode space, validated on construction."""

    cutoff: Cutoff
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        validate_density(m, self.cutoff)


TwoModeState = Union[SqueezedCoherent, SqueezedThermal, CoherentSuperposition, Fock, ExplicitDensityMatrix]


def validate_density(m: np.ndarray, cutoff: Cutoff):
    """Raise :class:`ValidationError` naming the first violated invariant and worst entry."""
    if m.shape != (cutoff.dim, cutoff.dim):
        raise ValidationError(f"shape {m.shape} does not match n_max={cutoff.n_max} (dim {cutoff.dim})")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    herm = np.abs(m - m.conj().T)
    if herm.max() > HERMITIAN_TOL:
        i, j = np.unravel_index(np.argmax(herm), herm.shape)
        raise ValidationError(
            f"not Hermitian: |rho[{i},{j}] - conj(rho[{j},{i}])| = {herm[i, j]:.3e}"
        )
    tr = np.trace(m).real
    if abs(tr - 1) > TRACE_TOL:
        raise ValidationError(f"trace is {tr:.12g}, deficit {1 - tr:.6g}")
    evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if evals[0] < -POSITIVITY_TOL:
        raise ValidationError(f"not positive semidefinite: smallest eigenvalue {evals[0]:.3e}")


# ------------------------------------------------------------ realizations


@dataclass
class JointPure:
    psi: np.ndarray  # shape (L1, L2)


@dataclass
class JointMixed:
    rho: np.ndarray
    cutoff: Cutoff


@dataclass
class ProductMixed:
    rho1: np.ndarray
    rho2: np.ndarray


Realization = Union[JointPure, JointMixed, ProductMixed]


def _squeezed_coherent_mode(z: complex, r: float, pad: int) -> np.ndarray:
    """Single-mode ``S(r)|z>`` with the cutoff grown until the top levels are empty."""
    shifted = abs(z * math.cosh(r) + np.conj(z) * math.sinh(r)) ** 2
    n_c, m_c = math.sinh(r) ** 2, abs(math.sinh(r) * math.cosh(r))
    mean = shifted + n_c
    spread = math.sqrt(shifted * math.exp(2 * abs(r)) + (n_c + 1) ** 2 + m_c**2)
    levels = max(fock.coherent_levels(z) + 1, math.ceil(mean + 12 * spread) + 16)
    while levels <= MAX_MODE_LEVELS:
        big = levels + pad
        start = fock.coherent_amplitudes(z, big)
        vec = fock.squeeze_vectors(r, start[:, None])[:, 0]
        if np.sum(np.abs(vec[levels:]) ** 2) < fock.TAIL_TOL and fock.top_weight(vec[:levels]) < fock.TAIL_TOL:
            vec = vec[:levels]
            return vec / np.linalg.norm(vec)
        levels = int(levels * 1.5) + 8
    raise CutoffTooSmall(f"squeezed coherent mode z={z}, r={r} needs more than {MAX_MODE_LEVELS} levels")


def _squeezed_thermal_mode(beta: float, r: float, pad: int) -> np.ndarray:
    """Single-mode ``S(r) rho_th S(r)^dag`` as a dense density matrix."""
    n_th = fock.thermal_levels(beta)
    w = fock.thermal_weights(beta, n_th + 1)
    keep = w > 1e-18
    w = w[keep]
    k = len(w)
    nbar = 1 / math.expm1(beta)
    levels = max(k + 4, math.ceil(((nbar + 0.5) * math.cosh(2 * r) + 0.5) * 12 + k * math.exp(2 * abs(r))) + 16)
    while levels <= MAX_MODE_LEVELS:
        big = levels + pad
        cols = np.zeros((big, k), complex)
        cols[np.arange(k), np.arange(k)] = 1.0
        out = fock.squeeze_vectors(r, cols)
        lost = float(np.sum(w * np.sum(np.abs(out[levels - 4:]) ** 2, axis=0)))
        if lost < fock.TAIL_TOL:
            out = out[:levels]
            rho = (out * w) @ out.conj().T
            return rho / np.trace(rho).real
        levels = int(levels * 1.5) + 8
    raise CutoffTooSmall(f"squeezed thermal mode beta={beta}, r={r} needs more than {MAX_MODE_LEVELS} levels")


def product_factor_keys(state: TwoModeState):
    """Hashable descriptions ``(kind, parameter, squeeze)`` of the two single-mode factors, else None."""
    if isinstance(state, Fock):
        return ("fock", state.n1, 0.0), ("fock", state.n2, 0.0)
    if isinstance(state, SqueezedCoherent):
        r1, r2 = state.squeezes
        return ("squeezed-coherent", complex(state.z1), r1), ("squeezed-coherent", complex(state.z2), r2)
    if isinstance(state, SqueezedThermal):
        r1, r2 = state.squeezes
        return ("squeezed-thermal", float(state.beta), r1), ("squeezed-thermal", float(state.beta), r2)
    return None


@functools.lru_cache(maxsize=8)
def mode_factor(key) -> np.ndarray:
    """Single-mode vector or density for a key from :func:`product_factor_keys` (read-only)."""
    kind, param, r = key
    pad = fock.default_pad(abs(r), abs(r))
    if kind == "fock":
        out = _basis(param)
    elif kind == "squeezed-coherent":
        out = _squeezed_coherent_mode(param, r, pad)
    else:
        out = _squeezed_thermal_mode(param, r, pad)
    out.flags.writeable = False
    return out


def product_factors(state: TwoModeState):
    """Single-mode factors (vectors or densities) of a product-family state, else None.

    Each factor is carried at its own convergent cutoff.
    """
    keys = product_factor_keys(state)
    return None if keys is None else tuple(mode_factor(k) for k in keys)


def _basis(n: int) -> np.ndarray:
    v = np.zeros(n + 3, complex)
    v[n] = 1.0
    return v


def default_cutoff(state: TwoModeState) -> Cutoff:
    """Square joint cutoff covering the state's photon-number tails."""
    if isinstance(state, ExplicitDensityMatrix):
        return state.cutoff
    if isinstance(state, Fock):
        return Cutoff(max(1, state.n1, state.n2))
    if isinstance(state, CoherentSuperposition):
        # two modes share the tail budget
        tol = fock.TAIL_TOL / 2
        n = max(fock.coherent_levels(complex(x), tol=tol) for x in (state.u1, state.u2, state.v1, state.v2))
        return Cutoff(n)
    r1 = realize(state)
    return Cutoff(max(r1.rho1.shape[0], r1.rho2.shape[0]) - 1 if isinstance(r1, ProductMixed)
                  else max(r1.psi.shape) - 1)


def realize(state: TwoModeState, cutoff: Cutoff | None = None) -> Realization:
    """Numerical representation of ``state``.

    Without a cutoff, product families are realized mode by mode at convergent
    cutoffs. With a cutoff, a joint square representation is returned and
    :class:`CutoffTooSmall` is raised if the discarded weight exceeds the tail
    tolerance.
    """
    if isinstance(state, ExplicitDensityMatrix):
        if cutoff is not None and cutoff.n_max != state.cutoff.n_max:
            raise InvalidParameter("an explicit density matrix carries its own cutoff")
        return JointMixed(state.matrix, state.cutoff)
    if isinstance(state, CoherentSuperposition):
        cutoff = cutoff or default_cutoff(state)
        psi = fock.superposition_state(state.u1, state.u2, state.v1, state.v2, state.r, state.eta, cutoff)
        return JointPure(psi.reshape(cutoff.levels, cutoff.levels))
    if isinstance(state, Fock):
        cutoff = cutoff or default_cutoff(state)
        psi = fock.fock_state(state.n1, state.n2, cutoff)
        return JointPure(psi.reshape(cutoff.levels, cutoff.levels))

    if isinstance(state, SqueezedCoherent):
        m1, m2 = product_factors(state)
        if cutoff is None:
            return JointPure(np.outer(m1, m2))
        m1, m2 = (_truncate_vector(m, cutoff.levels, state) for m in (m1, m2))
        return JointPure(np.outer(m1, m2))

    if isinstance(state, SqueezedThermal):
        rho1, rho2 = product_factors(state)
        if cutoff is None:
            return ProductMixed(rho1, rho2)
        rho1, rho2 = (_truncate_density(m, cutoff.levels, state) for m in (rho1, rho2))
        return JointMixed(np.kron(rho1, rho2), cutoff)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _truncate_vector(v: np.ndarray, levels: int, state) -> np.ndarray:
    out = np.zeros(levels, complex)
    n = min(levels, len(v))
    out[:n] = v[:n]
    lost = 1 - np.sum(np.abs(out) ** 2)
    if lost >= fock.TAIL_TOL:
        raise CutoffTooSmall(f"{state}: cutoff {levels - 1} discards weight {lost:.3e}")
    return out / np.linalg.norm(out)


def _truncate_density(m: np.ndarray, levels: int, state) -> np.ndarray:
    out = np.zeros((levels, levels), complex)
    n = min(levels, m.shape[0])
    out[:n, :n] = m[:n, :n]
    lost = 1 - np.trace(out).real
    if lost >= fock.TAIL_TOL:
        raise CutoffTooSmall(f"{state}: cutoff {levels - 1} discards weight {lost:.3e}")
    return out / np.trace(out).real


def joint_array(state: TwoModeState, cutoff: Cutoff) -> np.ndarray:
    """Flat state vector or density matrix on the square space of ``cutoff``."""
    rep = realize(state, cutoff)
    if isinstance(rep, JointPure):
        return rep.psi.reshape(-1)
    return rep.rho


# ------------------------------------------------------------ file format


def parse_density(text: str) -> ExplicitDensityMatrix:
    """Parse ``{"n_max": N, "rho": [[re, im], ...]}``.

    ``rho`` holds ``(N+1)^4`` entries, row-major over the basis index
    ``n1 (N+1) + n2``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "n_max" not in doc or "rho" not in doc:
        raise ParseError('expected an object with fields "n_max" and "rho"')
    n_max = doc["n_max"]
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise ParseError(f"n_max must be an integer >= 1, got {n_max!r}")
    cutoff = Cutoff(n_max)
    try:
        pairs = np.asarray(doc["rho"], dtype=float)
    except (TypeError, ValueError):
        raise ParseError("rho entries must be [re, im] pairs of numbers") from None
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ParseError("rho entries must be [re, im] pairs of numbers")
    if pairs.shape[0] != cutoff.dim**2:
        raise ParseError(f"rho has {pairs.shape[0]} entries, expected (n_max+1)^4 = {cutoff.dim**2}")
    matrix = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(cutoff.dim, cutoff.dim)
    return ExplicitDensityMatrix(cutoff, matrix)


def load_density(path) -> ExplicitDensityMatrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_density(text)


def format_density(matrix: np.ndarray, n_max: int) -> str:
    """Inverse of :func:`parse_density`."""
    flat = np.asarray(matrix, dtype=complex).reshape(-1)
    return json.dumps({"n_max": int(n_max), "rho": [[float(z.real), float(z.imag)] for z in flat]})
