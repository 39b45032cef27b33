"""Minimisation of the per-direction Mandel function over the unit sphere.

The reduced Mandel function is ``scale * (q.A.q + b.q + c)`` restricted to
``|q| = 1``: an equality-constrained trust-region subproblem. Its global
minimum follows from the eigendecomposition of ``A`` and the secular equation
``|(A - mu I)^{-1} b/2| = 1`` on ``mu <= lambda_min(A)``. A grid search with
Nelder-Mead refinement is provided for objectives given only as functions of
the polar angles (the printed closed forms) and as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import NumericalFailure, ZeroIntensity
from .moments import (
    PROBE_DIRECTIONS,
    S_MIN,
    MomentSummary,
    alpha_of_q,
    angles_of_q,
    extract_moments,
    q_of_angles,
)

DEGENERACY_TOL = 1e-9
HARD_CASE_TOL = 1e-12
TAU_TOL = 1e-7


@dataclass(frozen=True)
class SphereQuadratic:
    A: np.ndarray
    b: np.ndarray
    c: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.shape != (3, 3) or np.max(np.abs(A - A.T)) > 1e-12:
            raise ValueError("A must be a symmetric 3x3 matrix")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))

    def objective(self, q) -> float:
        q = np.asarray(q, dtype=float)
        return float(self.scale * (q @ self.A @ q + self.b @ q + self.c))


@dataclass
class QResult:
    """Minimum of the Mandel function and where it is attained."""

    q_min: float
    q_bar: np.ndarray
    theta: float
    phi: float
    alpha_bar: np.ndarray
    method: str
    degenerate: bool = False
    diagnostics: dict = field(default_factory=dict)


def reduce_to_sphere_quadratic(m: MomentSummary, s_min: float = S_MIN) -> SphereQuadratic:
    """Expand ``(Tr R - q.R.q + 2 v.q - 4 (s + u.q)^2) / (8 s)`` into quadratic form."""
    if m.s <= s_min:
        raise ZeroIntensity("vacuum state: Q undefined (zero mean photon number)")
    A = -m.R - 4 * np.outer(m.u, m.u)
    b = 2 * m.v - 8 * m.s * m.u
    c = float(np.trace(m.R) - 4 * m.s**2)
    return SphereQuadratic(A=A, b=b, c=c, scale=1 / (8 * m.s))


def _tie_key(q: np.ndarray) -> tuple[float, float]:
    theta, phi = angles_of_q(q)
    return round(theta, 12), round(phi, 12)


def _result(q: np.ndarray, value: float, method: str, degenerate: bool, **diag) -> QResult:
    q = q / np.linalg.norm(q)
    theta, phi = angles_of_q(q)
    return QResult(
        q_min=value,
        q_bar=q,
        theta=theta,
        phi=phi,
        alpha_bar=alpha_of_q(q),
        method=method,
        degenerate=degenerate,
        diagnostics=diag,
    )


def _bottom_completion(p: np.ndarray, basis: np.ndarray, tau: float) -> list[np.ndarray]:
    """Unit vectors ``p + w`` with ``w`` of length ``tau`` in span(basis), preferring small theta, phi."""
    proj = basis @ basis.T
    for target in (np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), np.array([0, 1.0, 0])):
        d = proj @ target
        if np.linalg.norm(d) > 1e-8:
            d /= np.linalg.norm(d)
            return [p + tau * d, p - tau * d]
    raise NumericalFailure("empty bottom eigenspace")


def minimize_sphere_quadratic(sq: SphereQuadratic) -> QResult:
    """Global minimiser of ``sq`` on the unit sphere with an optimality certificate."""
    A, b = sq.A, sq.b
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and math.isfinite(sq.c)):
        raise NumericalFailure("non-finite sphere quadratic")
    lam, V = np.linalg.eigh(A)
    g = V.T @ b / 2
    size = max(1.0, float(np.max(np.abs(lam))), float(np.linalg.norm(b)))
    bottom = np.abs(lam - lam[0]) <= 1e-10 * size
    g_bottom = float(np.linalg.norm(g[bottom]))
    rest = ~bottom

    hard = False
    if g_bottom <= HARD_CASE_TOL * size:
        inner = float(np.sum(g[rest] ** 2 / (lam[rest] - lam[0]) ** 2)) if rest.any() else 0.0
        hard = inner <= 1.0

    if hard:
        mu = lam[0]
        coeffs = np.zeros(3)
        coeffs[rest] = -g[rest] / (lam[rest] - lam[0])
        p = V @ coeffs
        tau = math.sqrt(max(0.0, 1 - p @ p))
        if tau < TAU_TOL:
            # p is already a unit vector up to rounding: a single minimiser
            tau = 0.0
            p = p / np.linalg.norm(p)
        candidates = _bottom_completion(p, V[:, bottom], tau) if tau > 0 else [p]
    else:
        g_red = g.copy()
        if g_bottom <= HARD_CASE_TOL * size:
            g_red[bottom] = 0.0

        live = g_red != 0

        def secular(t):
            return float(np.sum(g_red[live] ** 2 / (lam[live] - lam[0] + t) ** 2)) - 1.0

        # secular(t) is decreasing in t = lambda_min - mu; it is >= 0 at |g_bottom| (or 0+) and <= 0 at |g|
        hi = float(np.linalg.norm(g_red))
        lo = float(np.linalg.norm(g_red[bottom])) or 1e-300
        f_lo, f_hi = secular(lo), secular(hi)
        if not (math.isfinite(f_lo) and math.isfinite(f_hi)):
            raise NumericalFailure("could not bracket the secular root")
        # a sign flip at either end is rounding; the root sits on that end
        if f_lo <= 0:
            t = lo
        elif f_hi >= 0:
            t = hi
        else:
            t = optimize.brentq(secular, lo, hi, xtol=1e-16 * size, rtol=4 * np.finfo(float).eps, maxiter=500)
        mu = lam[0] - t
        coeffs = np.zeros(3)
        coeffs[live] = -g_red[live] / (lam[live] - mu)
        q = V @ coeffs
        q /= np.linalg.norm(q)
        # reflection through the bottom eigenspace gives the competing stationary point
        vb = V[:, bottom]
        mirror = q - 2 * vb @ (vb.T @ q)
        candidates = [q, mirror]

    values = [sq.objective(c / np.linalg.norm(c)) for c in candidates]
    best = min(values)
    tied = [c for c, val in zip(candidates, values) if val - best < DEGENERACY_TOL]
    degenerate = len({_tie_key(c / np.linalg.norm(c)) for c in tied}) > 1 or (hard and tau > 0 and int(bottom.sum()) > 1)
    q = min(tied, key=lambda c: _tie_key(c / np.linalg.norm(c)))
    q = q / np.linalg.norm(q)
    residual = float(np.linalg.norm((A - mu * np.eye(3)) @ q + b / 2))
    # the value at the chosen point (tie candidates agree within DEGENERACY_TOL)
    return _result(
        q,
        sq.objective(q),
        "SecularExact",
        degenerate,
        mu=float(mu),
        lambda_min=float(lam[0]),
        stationarity=residual,
        hard_case=hard,
    )


def _canonical(f: Callable[[float, float], float]):
    """Evaluate ``f`` at the canonical angles of the direction ``(theta, phi)``."""

    def wrapped(x):
        theta, phi = angles_of_q(q_of_angles(x[0], x[1]))
        val = f(theta, phi)
        if not math.isfinite(val):
            raise NumericalFailure(f"objective returned {val} at theta={theta}, phi={phi}")
        return val

    return wrapped


def _grid_values(f, thetas, phis) -> np.ndarray:
    T, P = np.meshgrid(thetas, phis, indexing="ij")
    try:
        vals = np.asarray(f(T, P), dtype=float)
        if vals.shape != T.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([[f(t, p) for p in phis] for t in thetas], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericalFailure("objective returned NaN/Inf on the grid")
    return vals


def minimize_grid(
    f: Callable,
    n_theta: int = 181,
    n_phi: int = 360,
    refine_tol: float = 1e-10,
    max_iter: int = 400,
    n_starts: int = 5,
) -> QResult:
    """Coarse ``theta x phi`` grid, then Nelder-Mead from the ``n_starts`` best cells.

    ``f(theta, phi)`` may be vectorised; scalar-only callables are evaluated in
    a loop. Theta runs over ``[0, pi]`` inclusive and phi over ``[0, 2 pi)``.
    """
    thetas = np.linspace(0, math.pi, n_theta)
    phis = np.arange(n_phi) * (2 * math.pi / n_phi)
    vals = _grid_values(f, thetas, phis)
    # pole rows represent a single point each
    vals[0, 1:] = np.inf
    vals[-1, 1:] = np.inf
    order = np.argsort(vals, axis=None, kind="stable")[:n_starts]
    g = _canonical(f)
    candidates = []
    iterations = 0
    for flat in order:
        i, j = np.unravel_index(flat, vals.shape)
        x0 = np.array([thetas[i], phis[j]])
        res = optimize.minimize(
            g,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": refine_tol,
                "fatol": 1e-15,
                "maxiter": max_iter,
                "initial_simplex": x0 + np.array([[0, 0], [0.5 * math.pi / n_theta, 0], [0, math.pi / n_phi]]),
            },
        )
        iterations += res.nit
        q = q_of_angles(*res.x)
        candidates.append((min(res.fun, vals[i, j]), q if res.fun <= vals[i, j] else q_of_angles(*x0)))
    best = min(c[0] for c in candidates)
    tied = [q for val, q in candidates if val - best < DEGENERACY_TOL]
    degenerate = len({tuple(np.round(q, 6)) for q in tied}) > 1
    q = min(tied, key=_tie_key)
    theta, phi = angles_of_q(q)
    return _result(
        q,
        float(g([theta, phi])),
        "GridRefine",
        degenerate,
        grid=(n_theta, n_phi),
        iterations=iterations,
    )


def invariant_mandel_q(state, cutoff=None, cross_check: bool = False, closed_form_tol: float = 2e-6) -> QResult:
    """Invariant Mandel parameter: the minimum of Q over all passively mixed modes.

    The moments of ``state`` are reduced to a sphere quadratic and minimised
    exactly. With ``cross_check`` a validated closed form for the state's family
    (if any) is minimised on the grid and must agree within ``closed_form_tol``.
    """
    m = extract_moments(state, cutoff)
    result = minimize_sphere_quadratic(reduce_to_sphere_quadratic(m))
    q_probe = min(
        reduce_to_sphere_quadratic(m).objective(p) for p in PROBE_DIRECTIONS
    )
    if result.q_min > q_probe + 1e-12:
        raise NumericalFailure(f"secular minimum {result.q_min} above probe value {q_probe}")
    result.diagnostics["s"] = m.s
    if cross_check:
        from .closed_forms import cross_check_minimum

        cross_check_minimum(state, result, closed_form_tol)
    return result
