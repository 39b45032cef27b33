import math

import numpy as np
import pytest

from conftest import sphere_objective
from mandelq.closed_forms import closed_form, q_fock
from mandelq.errors import ClosedFormMismatch, ZeroIntensity
from mandelq.minimizer import (
    SphereQuadratic,
    invariant_mandel_q,
    minimize_grid,
    minimize_sphere_quadratic,
    reduce_to_sphere_quadratic,
)
from mandelq.moments import MomentSummary, extract_moments, mandel_q_at, summarize
from mandelq.states import CoherentSuperposition, Fock, SqueezedCoherent, SqueezedThermal


def fake_summary(s, u, R, v):
    return MomentSummary(s=s, u=np.asarray(u, float), R=np.asarray(R, float), v=np.asarray(v, float), H=None, one_body=None)


def test_reduction_terms():
    R = np.diag([0.3, 1.2, 2.0])
    sq = reduce_to_sphere_quadratic(fake_summary(0.7, [0, 0, 0], R, [0, 0, 0]))
    assert np.allclose(sq.A, -R)
    assert np.allclose(sq.b, 0)
    assert sq.c == pytest.approx(np.trace(R) - 4 * 0.7**2)


def test_reduction_fock_pole():
    sq = reduce_to_sphere_quadratic(extract_moments(Fock(1, 0)))
    assert sq.objective([0, 0, 1]) == pytest.approx(-1)


def test_reduction_identity_random(rng):
    for _ in range(100):
        R = rng.normal(size=(3, 3))
        m = fake_summary(rng.uniform(0.1, 3), rng.normal(size=3), R + R.T, rng.normal(size=3))
        q = rng.normal(size=3)
        q /= np.linalg.norm(q)
        assert abs(reduce_to_sphere_quadratic(m).objective(q) - mandel_q_at(m, q)) < 1e-12


def test_reduction_rejects_vacuum():
    with pytest.raises(ZeroIntensity):
        reduce_to_sphere_quadratic(fake_summary(0.0, [0, 0, 0], np.zeros((3, 3)), [0, 0, 0]))


def test_secular_eigen_tie():
    res = minimize_sphere_quadratic(SphereQuadratic(np.diag([1.0, 2.0, 3.0]), np.zeros(3)))
    assert res.q_min == pytest.approx(1)
    assert res.degenerate
    assert np.allclose(res.q_bar, [1, 0, 0])


def test_secular_linear_only():
    res = minimize_sphere_quadratic(SphereQuadratic(np.zeros((3, 3)), np.array([0, 0, 1.0])))
    assert np.allclose(res.q_bar, [0, 0, -1])
    assert res.q_min == pytest.approx(-1)
    assert not res.degenerate


def test_secular_gradient_in_bottom_space():
    # whole gradient along a doubly degenerate bottom eigenvalue
    A = np.diag([-49.57, -46.09, -49.57])
    res = minimize_sphere_quadratic(SphereQuadratic(A, np.array([0, 0, 3.1])))
    f = sphere_objective(SphereQuadratic(A, np.array([0, 0, 3.1])))
    assert res.q_min == pytest.approx(minimize_grid(f).q_min, abs=1e-7)
    assert np.allclose(res.q_bar, [0, 0, -1])


def test_hard_case_circle_flagged():
    A = np.diag([-2.0, -2.0, 0.0])
    res = minimize_sphere_quadratic(SphereQuadratic(A, np.array([0, 0, 1.0])))
    assert res.diagnostics["hard_case"]
    assert res.degenerate
    assert res.q_min == pytest.approx(minimize_grid(sphere_objective(SphereQuadratic(A, np.array([0, 0, 1.0])))).q_min, abs=1e-7)


def test_secular_against_grid(rng):
    for _ in range(25):
        A = rng.normal(size=(3, 3))
        sq = SphereQuadratic(A + A.T, rng.normal(size=3) * rng.choice([0.01, 1, 5]), rng.normal(), 0.5)
        exact = minimize_sphere_quadratic(sq)
        assert exact.q_min == pytest.approx(minimize_grid(sphere_objective(sq)).q_min, abs=1e-7)
        assert exact.diagnostics["stationarity"] < 1e-9
        assert exact.diagnostics["mu"] <= exact.diagnostics["lambda_min"] + 1e-12


def test_grid_fock():
    res = minimize_grid(closed_form("fock", (2, 1)))
    assert res.q_min == pytest.approx(-2 / 3, abs=1e-8)
    assert res.theta == pytest.approx(0, abs=1e-6)


def test_grid_constant():
    res = minimize_grid(lambda t, p: 0.0 * t)
    assert res.q_min == 0
    assert res.degenerate
    assert res.theta == 0


def test_grid_accepts_scalar_callable():
    res = minimize_grid(lambda t, p: q_fock(1, 2, [math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)]))
    assert res.q_min == pytest.approx(-2 / 3, abs=1e-8)
    assert res.theta == pytest.approx(math.pi, abs=1e-6)


def test_invariant_fock():
    res = invariant_mandel_q(Fock(2, 1))
    assert res.q_min == pytest.approx(-2 / 3, abs=1e-12)
    assert np.allclose(res.q_bar, [0, 0, 1])
    assert np.allclose(np.abs(res.alpha_bar), [1, 0])


def test_invariant_squeezed_vacuum_not_subpoissonian():
    res = invariant_mandel_q(SqueezedCoherent(0, 0, 1.0, 0.4))
    assert res.q_min >= -1e-9
    # oracle value frozen from the factorised single-mode path
    assert res.q_min == pytest.approx(0.059713449278517045, abs=1e-8)


def test_invariant_superposition():
    res = invariant_mandel_q(CoherentSuperposition(0.5, 0.5, 1.0, 0, 0.5, 2.0))
    assert res.q_min <= 1e-9
    assert res.q_min == pytest.approx(-0.12511591381649204, abs=1e-8)


def test_cross_check_paths():
    res = invariant_mandel_q(CoherentSuperposition(0.5, 0.5, 1.0, 0, 0.5, 2.0), cross_check=True)
    assert res.method == "SecularExact"
    invariant_mandel_q(SqueezedCoherent(2, 4 * np.exp(0.25j * np.pi), 1.2, 0.3), cross_check=True)
    with pytest.raises(ClosedFormMismatch, match="open mismatch"):
        invariant_mandel_q(SqueezedThermal(1, 1, 1), cross_check=True)


def test_invariant_vacuum():
    with pytest.raises(ZeroIntensity, match="vacuum state"):
        invariant_mandel_q(SqueezedCoherent(0, 0, 0, 0))


def test_summary_from_raw_arrays():
    one = np.diag([1.0, 0.0]).astype(complex)
    m = summarize(one, np.zeros((3, 3), complex))
    assert m.s == 0.5
    assert np.allclose(m.u, [0, 0, 0.5])
