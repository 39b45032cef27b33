"""State moments and the per-direction Mandel function.

For the mixed mode ``a(alpha) = conj(alpha1) a1 + conj(alpha2) a2`` the Mandel
parameter depends on ``alpha`` only through the unit vector
``q = alpha^dag sigma alpha``:

    Q(rho; q) = (Tr R - q.R.q + 2 v.q - 4 (s + u.q)^2) / (8 s)

where ``s`` is half the mean total photon number, ``u`` comes from the
one-body matrix and ``R + iS = H`` is the matrix of pair moments
``H_jk = 4 <(K_j - i L_j)(K_k + i L_k)>`` with ``v_j = eps_jkl S_kl / 2``.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import fock
from .errors import CutoffTooSmall, ZeroIntensity, ZeroModeIntensity
from .fock import Cutoff
from .states import (
    ExplicitDensityMatrix,
    Fock,
    JointMixed,
    JointPure,
    TwoModeState,
    mode_factor,
    product_factor_keys,
    realize,
)

S_MIN = 1e-12
CONVERGENCE_TOL = 1e-7

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in itertools.permutations(range(3)):
    LEVI_CIVITA[_i, _j, _k] = np.linalg.det(np.eye(3)[[_i, _j, _k]])

# pair operators (K_k + i L_k) written on the basis (a1^2, a1 a2, a2^2)
PAIR_TRANSFORM = np.array(
    [
        [0.5, 0, -0.5],
        [0.5j, 0, 0.5j],
        [0, -1, 0],
    ],
    dtype=complex,
)


def _probe_directions() -> np.ndarray:
    pts = {tuple(p) for p in itertools.product((-1, 0, 1), repeat=3) if any(p)}
    arr = np.array(sorted(pts), dtype=float)
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


PROBE_DIRECTIONS = _probe_directions()


# -------------------------------------------------------- direction maps


def su2(alpha1: complex, alpha2: complex) -> np.ndarray:
    """Validated SU(2) label ``(alpha1, alpha2)`` with unit norm."""
    alpha = np.array([alpha1, alpha2], dtype=complex)
    if abs(np.vdot(alpha, alpha).real - 1) > 1e-12:
        raise ValueError(f"|alpha1|^2 + |alpha2|^2 must be 1, got {np.vdot(alpha, alpha).real}")
    return alpha


def q_of_alpha(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=complex)
    return np.einsum("i,jik,k->j", alpha.conj(), PAULI, alpha).real


def q_of_angles(theta: float, phi: float) -> np.ndarray:
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def angles_of_q(q) -> tuple[float, float]:
    """Polar angle from ``q3 = +1`` and azimuth in ``[0, 2pi)``; ``phi = 0`` on the poles."""
    q = np.asarray(q, dtype=float)
    rho = math.hypot(q[0], q[1])
    # atan2 keeps full precision near the poles, where acos does not
    theta = math.atan2(rho, q[2])
    if rho < 1e-15:
        return theta, 0.0
    phi = math.atan2(q[1], q[0]) % (2 * math.pi)
    return theta, phi


def alpha_of_angles(theta: float, phi: float) -> np.ndarray:
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def alpha_of_q(q) -> np.ndarray:
    """Representative ``(cos(theta/2), e^{i phi} sin(theta/2))`` of the direction ``q``."""
    return alpha_of_angles(*angles_of_q(q))


def lambda_of_alpha(alpha) -> np.ndarray:
    """Null complex vector ``-i alpha^T sigma_2 sigma_j alpha``."""
    alpha = np.asarray(alpha, dtype=complex)
    return -1j * np.einsum("i,il,jlk,k->j", alpha, PAULI[1], PAULI, alpha)


# -------------------------------------------------------------- summaries


@dataclass(frozen=True)
class MomentSummary:
    """State-dependent quantities entering the reduced Mandel function."""

    s: float
    u: np.ndarray
    R: np.ndarray
    v: np.ndarray
    H: np.ndarray
    one_body: np.ndarray

    def quartic(self, alpha) -> float:
        """``<a(alpha)^dag^2 a(alpha)^2>`` from the pair matrix, ``lambda_j conj(lambda_k) H_jk / 4``."""
        lam = lambda_of_alpha(alpha)
        return 0.25 * float(np.einsum("j,k,jk->", lam, lam.conj(), self.H).real)


def summarize(one_body: np.ndarray, H: np.ndarray) -> MomentSummary:
    """Build the summary from ``M_rs = <a_r^dag a_s>`` and the Hermitian pair matrix ``H``."""
    one_body = np.asarray(one_body, dtype=complex)
    H = 0.5 * (H + H.conj().T)
    s = 0.5 * float(np.trace(one_body).real)
    # <a(alpha)^dag a(alpha)> = alpha^dag M^T alpha, hence the transpose
    u = 0.5 * np.einsum("rs,jsr->j", one_body.T, PAULI).real
    R = H.real.copy()
    S = H.imag
    v = 0.5 * np.einsum("jkl,kl->j", LEVI_CIVITA, S)
    return MomentSummary(s=s, u=u, R=R, v=v, H=H, one_body=one_body)


def single_mode_moments(sigma: np.ndarray) -> np.ndarray:
    """``m[i, j] = <a^dag^i a^j>`` for ``i, j`` in 0..2; ``sigma`` is a vector or density."""
    levels = sigma.shape[0]
    a = sparse.diags(np.sqrt(np.arange(1, levels, dtype=float)), 1, format="csr")
    m = np.empty((3, 3), complex)
    if sigma.ndim == 1:
        powers = [sigma, a @ sigma]
        powers.append(a @ powers[1])
        for i, j in itertools.product(range(3), repeat=2):
            m[i, j] = np.vdot(powers[i], powers[j])
        return m
    # Tr(rho a^dag^i a^j) = sum(conj(a^i) * (a^j rho)) with a real
    ops = [sparse.identity(levels, format="csr"), a, a @ a]
    applied = [op @ sigma for op in ops]
    for i, j in itertools.product(range(3), repeat=2):
        m[i, j] = ops[i].multiply(applied[j]).sum()
    return m


def _from_product(m1: np.ndarray, m2: np.ndarray) -> MomentSummary:
    one_body = np.array([[m1[1, 1], m1[1, 0] * m2[0, 1]], [m1[0, 1] * m2[1, 0], m2[1, 1]]])
    # pair moments G_xy = <P_x^dag P_y> for P = (a1^2, a1 a2, a2^2)
    idx = [(2, 0), (1, 1), (0, 2)]
    G = np.empty((3, 3), complex)
    for x, (p1, p2) in enumerate(idx):
        for y, (r1, r2) in enumerate(idx):
            G[x, y] = m1[p1, r1] * m2[p2, r2]
    H = 4 * PAIR_TRANSFORM.conj() @ G @ PAIR_TRANSFORM.T
    return summarize(one_body, H)


def _from_joint(x: np.ndarray, cutoff: Cutoff) -> MomentSummary:
    a1, a2 = fock.ladder_operators(cutoff)
    k1, k2, k3, l1, l2, l3 = fock.noncompact_generators(cutoff)
    pairs = [k1 + 1j * l1, k2 + 1j * l2, k3 + 1j * l3]
    ladders = [a1, a2]
    if x.ndim == 1:
        lv = [op @ x for op in ladders]
        pv = [op @ x for op in pairs]
        one_body = np.array([[np.vdot(lv[r], lv[t]) for t in range(2)] for r in range(2)])
        H = 4 * np.array([[np.vdot(pv[j], pv[k]) for k in range(3)] for j in range(3)])
    else:
        one_body = np.array(
            [[fock.expectation(x, ladders[r].conj().T @ ladders[t]) for t in range(2)] for r in range(2)]
        )
        H = 4 * np.array(
            [[fock.expectation(x, pairs[j].conj().T @ pairs[k]) for k in range(3)] for j in range(3)]
        )
    return summarize(one_body, H)


def _shrink(sigma: np.ndarray, by: int) -> np.ndarray:
    keep = sigma.shape[0] - by
    if sigma.ndim == 1:
        out = sigma[:keep]
        return out / np.linalg.norm(out)
    out = sigma[:keep, :keep]
    return out / np.trace(out).real


@functools.lru_cache(maxsize=4096)
def _factor_moments(key) -> tuple[np.ndarray, np.ndarray]:
    """Single-mode moments of a product factor, at its cutoff and with the top 4 levels dropped."""
    sigma = mode_factor(key)
    full = single_mode_moments(sigma)
    # Fock factors are exact; the others are checked against a coarser cutoff
    coarse = full.copy() if key[0] == "fock" else single_mode_moments(_shrink(sigma, 4))
    full.flags.writeable = False
    coarse.flags.writeable = False
    return full, coarse


def _max_probe_gap(m1: MomentSummary, m2: MomentSummary) -> float:
    if m1.s <= S_MIN:
        return abs(m1.s - m2.s)
    return max(abs(mandel_q_at(m1, q) - mandel_q_at(m2, q)) for q in PROBE_DIRECTIONS)


def extract_moments(
    state: TwoModeState,
    cutoff: Cutoff | None = None,
    check_convergence: bool = True,
    tol: float = CONVERGENCE_TOL,
) -> MomentSummary:
    """Moments of ``state``.

    Product families without an explicit cutoff use factorised single-mode
    moments; everything else evaluates the pair operators ``K_k + i L_k`` on
    the joint truncated space. With ``check_convergence`` the result is
    recomputed with four levels fewer (factorised path) or four more (joint
    path) and :class:`CutoffTooSmall` is raised if Q moves by more than ``tol``
    at any probe direction.
    """
    keys = product_factor_keys(state) if cutoff is None else None
    if keys is not None:
        (f1, c1), (f2, c2) = (_factor_moments(k) for k in keys)
        summary = _from_product(f1, f2)
        if check_convergence and not isinstance(state, Fock):
            coarse = _from_product(c1, c2)
            gap = _max_probe_gap(summary, coarse)
            if gap > tol:
                raise CutoffTooSmall(f"{state}: Q changes by {gap:.2e} when dropping the top 4 levels")
        return summary

    rep = realize(state, cutoff)
    if isinstance(rep, JointPure):
        cut = Cutoff(rep.psi.shape[0] - 1)
        summary = _from_joint(rep.psi.reshape(-1), cut)
    else:
        cut = rep.cutoff
        summary = _from_joint(rep.rho, cut)
    if check_convergence and cutoff is not None and not isinstance(state, (ExplicitDensityMatrix, Fock)):
        finer = extract_moments(state, Cutoff(cut.n_max + 4, cut.pad), check_convergence=False)
        gap = _max_probe_gap(summary, finer)
        if gap > tol:
            raise CutoffTooSmall(f"{state}: Q changes by {gap:.2e} between n_max={cut.n_max} and {cut.n_max + 4}")
    return summary


def mandel_q_at(m: MomentSummary, q, s_min: float = S_MIN) -> float:
    """Reduced Mandel function of the summary at unit direction ``q``."""
    if m.s <= s_min:
        raise ZeroIntensity("vacuum state: Q undefined (zero mean photon number)")
    q = np.asarray(q, dtype=float)
    quad = np.trace(m.R) - q @ m.R @ q + 2 * m.v @ q
    return float((quad - 4 * (m.s + m.u @ q) ** 2) / (8 * m.s))


# ------------------------------------------------------------ direct path


def _mode_number_and_quartic(state: TwoModeState, alpha, cutoff: Cutoff | None):
    """``(<A^dag A>, <A^dag^2 A^2>, <N_total>)`` for ``A = a(alpha)`` by direct operator algebra."""
    alpha = np.asarray(alpha, dtype=complex)
    c1, c2 = alpha.conj()
    rep = realize(state, cutoff)
    if isinstance(rep, JointPure):
        psi = rep.psi
        a1 = sparse.diags(np.sqrt(np.arange(1, psi.shape[0], dtype=float)), 1, format="csr")
        a2t = sparse.diags(np.sqrt(np.arange(1, psi.shape[1], dtype=float)), -1, format="csr")

        def lower(x):
            return c1 * (a1 @ x) + c2 * (x @ a2t)

        once = lower(psi)
        twice = lower(once)
        total = np.vdot(a1 @ psi, a1 @ psi).real + np.vdot(psi @ a2t, psi @ a2t).real
        return np.vdot(once, once).real, np.vdot(twice, twice).real, total
    if isinstance(rep, JointMixed):
        a1, a2 = fock.ladder_operators(rep.cutoff)
        A = c1 * a1 + c2 * a2
        Ad = A.conj().T
        n = fock.expectation(rep.rho, Ad @ A).real
        quartic = fock.expectation(rep.rho, Ad @ Ad @ A @ A).real
        total = fock.expectation(rep.rho, a1.conj().T @ a1 + a2.conj().T @ a2).real
        return n, quartic, total
    # product of single-mode densities: expand A^2 binomially over the two modes
    m1, m2 = single_mode_moments(rep.rho1), single_mode_moments(rep.rho2)
    coef2 = {k: math.comb(2, k) * c1**k * c2 ** (2 - k) for k in range(3)}
    quartic = sum(
        np.conj(coef2[j]) * coef2[k] * m1[j, k] * m2[2 - j, 2 - k] for j in range(3) for k in range(3)
    ).real
    coef1 = {0: c2, 1: c1}
    n = sum(
        np.conj(coef1[j]) * coef1[k] * m1[j, k] * m2[1 - j, 1 - k] for j in range(2) for k in range(2)
    ).real
    return n, quartic, (m1[1, 1] + m2[1, 1]).real


def mandel_q_direct(state: TwoModeState, alpha, cutoff: Cutoff | None = None, s_min: float = S_MIN) -> float:
    """``(<A^dag^2 A^2> - <A^dag A>^2) / <N_total>`` evaluated with explicit operators."""
    n, quartic, total = _mode_number_and_quartic(state, alpha, cutoff)
    if total <= 2 * s_min:
        raise ZeroIntensity("vacuum state: Q undefined (zero mean photon number)")
    return (quartic - n * n) / total


def mandel_q_covariant_denominator(
    state: TwoModeState, alpha, cutoff: Cutoff | None = None, s_min: float = S_MIN
) -> float:
    """As :func:`mandel_q_direct` but normalised by the selected mode's own intensity."""
    n, quartic, _ = _mode_number_and_quartic(state, alpha, cutoff)
    if n <= s_min:
        raise ZeroModeIntensity(f"mode alpha={np.round(alpha, 6)} carries no photons")
    return (quartic - n * n) / n
