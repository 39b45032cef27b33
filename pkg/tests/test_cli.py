import csv
import io
import json
import math

import numpy as np
import pytest

from mandelq import cli
from mandelq.fock import Cutoff
from mandelq.states import format_density


def run(argv):
    out = io.StringIO()
    code = cli.main(argv, out)
    return code, out.getvalue()


def write_density(path, rho, n_max):
    path.write_text(format_density(rho, n_max))
    return str(path)


def test_point_fock():
    code, text = run(["point", "fock", "--n1", "2", "--n2", "1"])
    assert code == 0
    assert "Q = -0.666667" in text
    assert "q_bar = (0.0, 0.0, 1.0)" in text
    assert "method = SecularExact" in text


def test_point_vacuum_exit_code(capsys):
    code, _ = run(["point", "squeezed-coherent", "--z1", "0", "--z2", "0", "--a", "0", "--b", "0"])
    assert code == 2
    assert "vacuum state: Q undefined (zero mean photon number)" in capsys.readouterr().err


def test_point_thermal():
    code, text = run(["point", "squeezed-thermal", "--beta", "1", "--a", "0", "--b", "0"])
    assert code == 0
    assert "Q = 0.290988" in text


def test_point_polar_and_cross_check():
    code, text = run(["point", "squeezed-coherent", "--z1", "0", "--z2", "3@pi/2", "--a", "0.5", "--b", "0.5", "--cross-check"])
    assert code == 0
    q = float(text.split("(")[1].split(")")[0])
    assert q < 0


def test_point_cross_check_thermal_fails(capsys):
    code, _ = run(["point", "squeezed-thermal", "--beta", "1", "--a", "0.2", "--b", "0.1", "--cross-check"])
    assert code == 4
    assert "open mismatch" in capsys.readouterr().err


def test_point_bad_parameter(capsys):
    code, _ = run(["point", "squeezed-thermal", "--beta", "-1", "--a", "0", "--b", "0"])
    assert code == 3
    assert "beta" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        cli.main(["point", "fock", "--n1", "x", "--n2", "1"])
    assert info.value.code == 1


def test_env_cutoff(monkeypatch):
    monkeypatch.setenv(cli.CUTOFF_ENV, "4")
    code, text = run(["point", "fock", "--n1", "1", "--n2", "1"])
    assert code == 0
    monkeypatch.setenv(cli.CUTOFF_ENV, "zero")
    assert run(["point", "fock", "--n1", "1", "--n2", "1"])[0] == 3


def test_parse_helpers():
    assert cli.parse_real("pi/4") == pytest.approx(math.pi / 4)
    assert cli.parse_real("-2pi") == pytest.approx(-2 * math.pi)
    assert cli.parse_real("1.5*pi/2") == pytest.approx(0.75 * math.pi)
    assert cli.parse_complex("3@pi/2") == pytest.approx(3j)
    assert cli.parse_complex("1+2j") == 1 + 2j
    assert cli._fmt(-0.0) == "0.0"
    assert cli._fmt(0.1) == "0.1"


def test_custom_one_photon(tmp_path):
    c = Cutoff(3)
    rho = np.zeros((c.dim, c.dim))
    rho[c.index(1, 0), c.index(1, 0)] = 1
    code, text = run(["custom", write_density(tmp_path / "r.json", rho, 3)])
    assert code == 0
    assert "Q = -1.000000" in text


def test_custom_trace_deficit(tmp_path, capsys):
    c = Cutoff(3)
    rho = np.zeros((c.dim, c.dim))
    rho[c.index(1, 0), c.index(1, 0)] = 0.9
    code, _ = run(["custom", write_density(tmp_path / "r.json", rho, 3)])
    assert code == 3
    assert "deficit 0.1" in capsys.readouterr().err


def test_custom_two_term_mixture(tmp_path):
    c = Cutoff(3)
    rho = np.zeros((c.dim, c.dim))
    rho[0, 0] = rho[c.index(1, 0), c.index(1, 0)] = 0.5
    code, text = run(["custom", write_density(tmp_path / "r.json", rho, 3)])
    assert code == 0
    assert "Q = -0.500000" in text


def test_custom_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert run(["custom", str(p)])[0] == 3


def test_sweep_rejects_foreign_axis():
    code, _ = run(["sweep", "fock", "--set", "n2=1", "--axis", "a=0:1:2"])
    assert code == 3


def test_sweep_thermal_symmetric_and_positive():
    code, text = run(["sweep", "squeezed-thermal", "--set", "beta=1", "--axis", "a=0:1:21", "--axis", "b=0:1:21"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 441
    assert list(rows[0]) == ["a", "b", "Q", "q1", "q2", "q3", "method", "degenerate_flag"]
    grid = np.array([float(r["Q"]) for r in rows]).reshape(21, 21)
    assert grid.min() > 0
    assert np.max(np.abs(grid - grid.T)) < 1e-9


def test_sweep_row_major_order():
    code, text = run(["sweep", "squeezed-thermal", "--set", "beta=2", "--axis", "b=0:0.2:2", "--axis", "a=0:0.4:3"])
    rows = list(csv.reader(io.StringIO(text)))[1:]
    assert [(r[0], r[1]) for r in rows] == [
        ("0.0", "0.0"), ("0.0", "0.2"), ("0.0", "0.4"), ("0.2", "0.0"), ("0.2", "0.2"), ("0.2", "0.4"),
    ]


def test_sweep_undefined_points_continue():
    code, text = run(["sweep", "--preset", "fig1a"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[1] == ["0.0", "0.0", "", "", "", "", "", "undefined"]
    assert len(rows) == 1 + 31 * 31
    assert all(r[7] != "undefined" for r in rows[2:])


def test_fig1d_diagonal_goes_negative():
    code, text = run(["sweep", "--preset", "fig1d"])
    rows = [r for r in csv.DictReader(io.StringIO(text)) if r["a"] == r["b"]]
    assert min(float(r["Q"]) for r in rows) < 0


def test_fig5a_nonpositive():
    code, text = run(["sweep", "--preset", "fig5a"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 120
    assert {r["r"] for r in rows} == {"0.5", "1.0"}
    assert max(float(r["Q"]) for r in rows) <= 1e-9


def test_sweep_json_metadata():
    code, text = run(["sweep", "squeezed-thermal", "--set", "beta=0.5", "--set", "b=0", "--axis", "a=0:0.5:3", "--format", "json"])
    doc = json.loads(text)
    meta = doc["metadata"]
    assert meta["family"] == "squeezed-thermal"
    assert meta["fixed"] == {"beta": 0.5, "b": 0.0}
    assert meta["axes"] == [{"name": "a", "min": 0.0, "max": 0.5, "steps": 3, "endpoint": True}]
    assert meta["cutoff"] == "auto"
    assert meta["version"] == cli.__version__
    assert "note" in meta
    assert doc["columns"] == ["a", "Q", "q1", "q2", "q3", "method", "degenerate_flag"]
    assert len(doc["rows"]) == 3
    assert run(["sweep", "--preset", "fig5a", "--format", "json"])[1].count('"note"') == 0


def test_preset_excludes_manual_axes():
    assert run(["sweep", "--preset", "fig4a", "--axis", "a=0:1:2"])[0] == 3


def test_sweep_output_file_and_jobs(tmp_path):
    args = ["sweep", "superposition", "--set", "u1=0.5", "--set", "u2=0.5", "--set", "v1=1", "--set", "v2=0",
            "--set", "r=0.5", "--axis", "eta=0:2pi:12:open"]
    run(args + ["-o", str(tmp_path / "a.csv")])
    run(args + ["-o", str(tmp_path / "b.csv"), "--jobs", "2"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len((tmp_path / "a.csv").read_text().splitlines()) == 13


def test_sweep_spec_validation():
    with pytest.raises(Exception):
        cli.SweepSpec("squeezed-thermal", {"beta": 1, "a": 0.1}, (cli.Axis("a", 0, 1, 3),))
    with pytest.raises(Exception):
        cli.Axis("a", 1, 0, 3)
    with pytest.raises(Exception):
        cli.Axis("a", 0, 1, 1)


def test_all_presets_present():
    names = {f"fig{i}{t}" for i in range(1, 6) for t in "abcd"}
    assert set(cli.PRESETS) == names
    assert cli.PRESETS["fig2d"].fixed == {"u": 2.0, "phi_u": math.pi / 2, "v": 2.0, "phi_v": math.pi / 2}
    assert cli.PRESETS["fig3a"].fixed["v"] == 4.0
    assert cli.PRESETS["fig5c"].fixed == {"u1": 1.5, "u2": 1.0, "v1": 1.0, "v2": 0.0}


def test_validate_fock(tmp_path):
    code, text = run(["validate", "fock", "--ledger", str(tmp_path / "l.json")])
    assert code == 0
    assert "Match = 240, Mismatch = 0" in text
    assert json.loads((tmp_path / "l.json").read_text())["entries"] == []


def test_validate_thermal_reports_every_point(tmp_path):
    code, text = run(["validate", "squeezed-thermal", "--points", "20", "--ledger", str(tmp_path / "l.json")])
    assert code == 4
    assert "Mismatch = 20" in text
    entries = json.loads((tmp_path / "l.json").read_text())["entries"]
    assert len(entries) == 20
    assert all(math.isfinite(e["oracle_value"]) for e in entries)


def test_validate_superposition_fig5_grid():
    code, text = run(["validate", "superposition"])
    assert code == 0
    assert "Mismatch = 0" in text
