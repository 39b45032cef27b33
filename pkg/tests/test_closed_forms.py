import json
import math

import numpy as np
import pytest

from mandelq.closed_forms import (
    CORRECTIONS,
    FAMILIES,
    OPEN_MISMATCHES,
    DiscrepancyLedger,
    closed_form,
    closed_form_params,
    q_fock,
    q_squeezed_coherent,
    q_squeezed_thermal,
    q_superposition,
    state_for,
    validate_closed_form,
)
from mandelq.errors import ClosedFormMismatch, InvalidParameter, ZeroIntensity
from mandelq.minimizer import invariant_mandel_q, minimize_grid
from mandelq.moments import alpha_of_angles, alpha_of_q, mandel_q_direct, q_of_angles
from mandelq.states import CoherentSuperposition, SqueezedCoherent, SqueezedThermal

NBAR1 = 1 / math.expm1(1)
THERMAL_OPEN = "printed squeezed-thermal expression is an open mismatch (see OPEN_MISMATCHES)"

# oracle values, frozen from the Fock-space evaluation
ORACLE_THERMAL_B1_A05_B05 = 0.0815629066349224
ORACLE_SUPERPOSITION_PROBE = 0.0017959945803785377
ORACLE_SQCOH_PROBE = 5.754762301103519


def test_fock_anchors():
    assert q_fock(1, 0, [0, 0, 1]) == pytest.approx(-1)
    assert q_fock(2, 1, [0, 0, 1]) == pytest.approx(-2 / 3)
    assert q_fock(1, 1, [0, 0, 1]) == pytest.approx(-0.5)
    assert q_fock(1, 1, [0, 0, -1]) == pytest.approx(-0.5)
    with pytest.raises(ZeroIntensity, match="vacuum"):
        q_fock(0, 0, [0, 0, 1])


def test_fock_validation_match():
    rep = validate_closed_form("fock", (3, 1), [0, 0, 1])
    assert rep.verdict == "Match"
    assert rep.abs_diff < 1e-10


def test_thermal_oracle_side():
    state = state_for("squeezed-thermal", (1, 0, 0))
    assert mandel_q_direct(state, [1, 0]) == pytest.approx(NBAR1 / 2, abs=1e-8)
    state = state_for("squeezed-thermal", (1, 0.5, 0.5))
    assert mandel_q_direct(state, [1, 0]) == pytest.approx(ORACLE_THERMAL_B1_A05_B05, abs=1e-8)


def test_thermal_oracle_swap_symmetry(rng):
    # a <-> b flips the sign of the mode-1 squeeze, i.e. a quarter turn of phi
    for _ in range(5):
        beta, a, b = rng.uniform(0.5, 3), *rng.uniform(0, 0.5, 2)
        t, p = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        lhs = mandel_q_direct(state_for("squeezed-thermal", (beta, a, b)), alpha_of_angles(t, p))
        rhs = mandel_q_direct(state_for("squeezed-thermal", (beta, b, a)), alpha_of_angles(t, p + math.pi / 2))
        assert lhs == pytest.approx(rhs, abs=1e-9)


@pytest.mark.xfail(strict=True, reason=THERMAL_OPEN)
def test_thermal_printed_unsqueezed_value():
    assert q_squeezed_thermal(1, 0, 0, [0, 0, 1]) == pytest.approx(0.290988, abs=1e-6)


@pytest.mark.xfail(strict=True, reason=THERMAL_OPEN)
def test_thermal_printed_matches_oracle():
    assert q_squeezed_thermal(1, 0.5, 0.5, [0, 0, 1]) == pytest.approx(ORACLE_THERMAL_B1_A05_B05, abs=1e-6)


def test_thermal_printed_swap_symmetry():
    # the printed expression is wrong in value but keeps this symmetry
    lhs = q_squeezed_thermal(2, 0.3, 0.6, q_of_angles(0.9, 0.4))
    assert lhs == pytest.approx(q_squeezed_thermal(2, 0.6, 0.3, q_of_angles(0.9, 0.4 + math.pi / 2)), abs=1e-9)


@pytest.mark.xfail(strict=True, reason=THERMAL_OPEN)
def test_thermal_grid_minimum_matches_secular():
    grid = minimize_grid(closed_form("squeezed-thermal", (1, 0.5, 0.5), "printed"))
    exact = invariant_mandel_q(state_for("squeezed-thermal", (1, 0.5, 0.5)))
    assert grid.q_min == pytest.approx(exact.q_min, abs=1e-7)


def test_thermal_mismatch_goes_to_ledger():
    ledger = DiscrepancyLedger()
    rep = validate_closed_form("squeezed-thermal", (2, 0.3, 0.6), [0.3, 0.4, math.sqrt(0.75)])
    assert rep.verdict == "Mismatch"
    assert ledger.record(rep)
    entry = ledger.entries[0]
    assert entry["oracle_value"] == pytest.approx(rep.oracle_value)
    assert "squeezed-thermal" in OPEN_MISMATCHES and entry["suspected_terms"]
    zero = validate_closed_form("squeezed-thermal", (1, 0, 0), [0, 0, 1])
    assert zero.oracle_value == pytest.approx(0.290988, abs=1e-6)


def test_thermal_has_no_resolved_reading():
    with pytest.raises(ClosedFormMismatch):
        q_squeezed_thermal(1, 0.1, 0.1, [0, 0, 1], reading="resolved")


def test_superposition_coherent_limit(rng):
    for _ in range(10):
        t, p = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        assert abs(q_superposition(1, 0, 0.7, 0, 1.3, t, p)) < 1e-9


def test_superposition_probe():
    rep = validate_closed_form("superposition", (0.5, 0.5, 1.0, 0.5, math.pi / 2), (math.pi / 3, math.pi / 5))
    assert rep.oracle_value == pytest.approx(ORACLE_SUPERPOSITION_PROBE, abs=1e-9)
    assert rep.verdict == "Match"
    assert rep.abs_diff < 1e-6


def test_superposition_periodic_in_eta():
    a = q_superposition(0.5, 1.0, 1.0, 0.5, 0.7, 1.2, 2.2)
    b = q_superposition(0.5, 1.0, 1.0, 0.5, 0.7 + 2 * math.pi, 1.2, 2.2)
    assert a == pytest.approx(b, abs=1e-12)


def test_superposition_fig5a_directions(rng):
    for r in (0.5, 1.0):
        for _ in range(10):
            d = (rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
            rep = validate_closed_form("superposition", (0.5, 0.5, 1.0, r, rng.uniform(0, 2 * math.pi)), d)
            assert rep.verdict == "Match"


def test_superposition_printed_reading_differs():
    args = (0.5, 0.5, 1.0, 0.5, 1.0, 1.0, 0.5)
    oracle = mandel_q_direct(state_for("superposition", args[:5]), alpha_of_angles(*args[5:]))
    assert abs(q_superposition(*args, reading="printed") - oracle) > 1e-3
    assert q_superposition(*args) == pytest.approx(oracle, abs=1e-9)


def test_superposition_rejects_negative_weight():
    with pytest.raises(InvalidParameter):
        q_superposition(1, 0, 0, -1, 0, 0, 0)


def test_squeezed_vacuum_minimum_nonnegative():
    res = minimize_grid(closed_form("squeezed-coherent", (0, 0, 0, 0, 1.0, 0.3)))
    assert res.q_min >= -1e-9


def test_squeezed_coherent_pure_coherent(rng):
    for _ in range(10):
        t, p = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        assert abs(q_squeezed_coherent(1, 0, 1, 0, 0, 0, t, p)) < 1e-8


def test_squeezed_coherent_probe():
    params = (0, 0, 3.0, math.pi / 2, 0.8, 0.8)
    rep = validate_closed_form("squeezed-coherent", params, (2.0, 1.0))
    assert rep.oracle_value == pytest.approx(ORACLE_SQCOH_PROBE, abs=1e-7)
    assert rep.abs_diff < 1e-5


def test_squeezed_coherent_printed_reading_differs():
    params = (1.0, 0.3, 2.0, 1.1, 0.3, 0.1)
    oracle = mandel_q_direct(state_for("squeezed-coherent", params), alpha_of_angles(1.0, 2.0))
    assert abs(q_squeezed_coherent(*params, 1.0, 2.0, reading="printed") - oracle) > 1e-3


def test_closed_form_is_vectorised():
    f = closed_form("squeezed-coherent", (1.0, 0.3, 2.0, 1.1, 0.3, 0.1))
    t = np.linspace(0, math.pi, 4)[:, None]
    p = np.linspace(0, 2 * math.pi, 5)[None, :]
    grid = f(t, p)
    assert grid.shape == (4, 5)
    assert grid[2, 3] == pytest.approx(float(f(t[2, 0], p[0, 3])))


def test_closed_form_scale_convention():
    assert state_for("squeezed-thermal", (1, 0.2, 0.3)) == SqueezedThermal(1, 0.4, 0.6)
    assert state_for("superposition", (0.5, 0.5, 1, 0.5, 2)) == CoherentSuperposition(0.5, 0.5, 1, 0, 0.5, 2)
    state = state_for("squeezed-coherent", (1, 0.5, 2, 0.1, 0.2, 0.3))
    assert isinstance(state, SqueezedCoherent)
    assert (state.a, state.b) == pytest.approx((0.4, 0.6))


@pytest.mark.parametrize("family", FAMILIES)
def test_params_roundtrip(family):
    params = {
        "fock": (2, 1),
        "squeezed-thermal": (1.5, 0.2, 0.1),
        "superposition": (0.5, 1.0, 1.0, 0.5, 0.3),
        "squeezed-coherent": (1.0, 0.3, 2.0, 1.1, 0.3, 0.1),
    }[family]
    fam, back = closed_form_params(state_for(family, params))
    assert fam == family
    assert back == pytest.approx(params)


def test_no_closed_form_for_general_superposition():
    assert closed_form_params(CoherentSuperposition(0.5, 0.5, 1, 0.2, 0.5, 2)) is None


def test_corrections_listed_for_resolved_families():
    fams = {c.family for c in CORRECTIONS}
    assert fams == {"superposition", "squeezed-coherent"}


def test_ledger_json(tmp_path):
    ledger = DiscrepancyLedger()
    for params in [(2, 0.3, 0.6), (1, 0.1, 0.0)]:
        ledger.record(validate_closed_form("squeezed-thermal", params, q_of_angles(0.4, 0.2)))
    assert not ledger.record(validate_closed_form("fock", (1, 2), (0.3, 0.3)))
    path = tmp_path / "ledger.json"
    ledger.to_json(path)
    doc = json.loads(path.read_text())
    assert len(doc["entries"]) == 2
    assert all(math.isfinite(e["oracle_value"]) for e in doc["entries"])
