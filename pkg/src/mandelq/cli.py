"""Command-line front end: single points, grid sweeps, density files, closed-form checks.

Exit codes: 0 success, 1 usage, 2 degenerate input, 3 validation or parse
error, 4 numerical failure (including closed-form mismatches).
"""
from __future__ import annotations

import argparse
import cmath
import csv
import io
import itertools
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import closed_forms
from .errors import InvalidParameter, MandelQError, ZeroIntensity
from .fock import Cutoff, default_pad
from .minimizer import DEGENERACY_TOL, invariant_mandel_q
from .moments import CONVERGENCE_TOL
from .states import CoherentSuperposition, Fock, SqueezedCoherent, SqueezedThermal, load_density

CUTOFF_ENV = "MANDELQ_CUTOFF"
CROSS_CHECK_TOL = 2e-6

# sweepable parameters per family; squeezed-coherent displacements are polar
SWEEP_PARAMS = {
    "squeezed-coherent": ("u", "phi_u", "v", "phi_v", "a", "b"),
    "squeezed-thermal": ("beta", "a", "b"),
    "superposition": ("u1", "u2", "v1", "v2", "r", "eta"),
    "fock": ("n1", "n2"),
}
AXIS_NAMES = ("a", "b", "eta", "beta", "r")
AB_RANGE = (0.0, 1.5, 31)
AXIS_RANGE_NOTE = "a and b ranges are tool defaults, overridable with --axis"

_PI_TERM = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_real(text: str) -> float:
    """Float literal, or a multiple of pi such as ``pi/4``, ``-2pi`` or ``1.5*pi/2``."""
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_TERM.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    coef = m.group(1)
    value = math.pi * (float(coef) if coef not in ("", "+", "-") else float(coef + "1"))
    return value / float(m.group(2)) if m.group(2) else value


def parse_complex(text: str) -> complex:
    """Python complex literal (``1+2j``) or polar ``modulus@phase`` (``3@pi/4``)."""
    if "@" in text:
        mod, phase = text.split("@", 1)
        return parse_real(mod) * cmath.exp(1j * parse_real(phase))
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _fmt(x: float) -> str:
    """Shortest round-trip decimal with negative zero folded to zero."""
    x = float(x)
    return repr(x + 0.0) if x == 0 else repr(x)


# ------------------------------------------------------------------ sweeps


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    steps: int
    endpoint: bool = True

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise InvalidParameter(f"axis {self.name!r} not sweepable; choose from {', '.join(AXIS_NAMES)}")
        if self.steps < 2:
            raise InvalidParameter(f"axis {self.name}: steps must be >= 2, got {self.steps}")
        if not self.start < self.stop:
            raise InvalidParameter(f"axis {self.name}: need min < max, got {self.start}:{self.stop}")

    def values(self) -> list[float]:
        return [float(x) for x in np.linspace(self.start, self.stop, self.steps, endpoint=self.endpoint)]

    def as_dict(self) -> dict:
        return {"name": self.name, "min": self.start, "max": self.stop, "steps": self.steps, "endpoint": self.endpoint}


def parse_axis(text: str) -> Axis:
    """``name=min:max:steps``; append ``:open`` to exclude the upper end."""
    try:
        name, rng = text.split("=", 1)
        parts = rng.split(":")
        endpoint = True
        if len(parts) == 4 and parts[3] == "open":
            endpoint = False
            parts = parts[:3]
        start, stop, steps = parts
        return Axis(name.strip(), parse_real(start), parse_real(stop), int(steps), endpoint)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        if isinstance(exc, InvalidParameter):
            raise argparse.ArgumentTypeError(str(exc)) from None
        raise argparse.ArgumentTypeError(f"bad axis {text!r}; expected name=min:max:steps[:open]") from None


def parse_setting(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"bad setting {text!r}; expected name=value")
    name, value = text.split("=", 1)
    return name.strip(), parse_real(value)


@dataclass(frozen=True)
class SweepSpec:
    family: str
    fixed: dict
    axes: tuple
    cutoff: int | None = None
    cross_check: bool = False
    fmt: str = "csv"

    def __post_init__(self):
        if self.family not in SWEEP_PARAMS:
            raise InvalidParameter(f"unknown family {self.family!r}")
        names = SWEEP_PARAMS[self.family]
        if not 1 <= len(self.axes) <= 2:
            raise InvalidParameter("a sweep needs one or two axes")
        swept = [ax.name for ax in self.axes]
        if len(set(swept)) != len(swept):
            raise InvalidParameter(f"repeated axis in {swept}")
        for name in itertools.chain(swept, self.fixed):
            if name not in names:
                raise InvalidParameter(f"{self.family} has no parameter {name!r}; expected {', '.join(names)}")
        clash = set(swept) & set(self.fixed)
        if clash:
            raise InvalidParameter(f"parameters both fixed and swept: {', '.join(sorted(clash))}")
        missing = set(names) - set(swept) - set(self.fixed)
        if missing:
            raise InvalidParameter(f"missing parameters: {', '.join(sorted(missing))}")
        if self.fmt not in ("csv", "json"):
            raise InvalidParameter(f"unknown format {self.fmt!r}")

    def points(self) -> list[dict]:
        """Parameter dicts in row-major order over the declared axes."""
        grids = [ax.values() for ax in self.axes]
        out = []
        for combo in itertools.product(*grids):
            params = dict(self.fixed)
            params.update(zip((ax.name for ax in self.axes), combo))
            out.append(params)
        return out


def build_state(family: str, p: dict):
    if family == "squeezed-coherent":
        return SqueezedCoherent(
            p["u"] * cmath.exp(1j * p["phi_u"]), p["v"] * cmath.exp(1j * p["phi_v"]), p["a"], p["b"]
        )
    if family == "squeezed-thermal":
        return SqueezedThermal(p["beta"], p["a"], p["b"])
    if family == "superposition":
        return CoherentSuperposition(p["u1"], p["u2"], p["v1"], p["v2"], p["r"], p["eta"])
    if family == "fock":
        return Fock(int(p["n1"]), int(p["n2"]))
    raise InvalidParameter(f"unknown family {family!r}")


def _ab_axes() -> tuple:
    return Axis("a", *AB_RANGE), Axis("b", *AB_RANGE)


def _presets() -> dict:
    out = {}
    pi = math.pi
    fig1 = [(0.0, 0.0), (3.0, 0.0), (3.0, pi / 4), (3.0, pi / 2)]
    for tag, (v, pv) in zip("abcd", fig1):
        out[f"fig1{tag}"] = SweepSpec("squeezed-coherent", dict(u=0.0, phi_u=0.0, v=v, phi_v=pv), _ab_axes())
    phases = [(0.0, 0.0), (0.0, pi / 4), (0.0, pi / 2), (pi / 2, pi / 2)]
    for fig, (u, v) in (("fig2", (2.0, 2.0)), ("fig3", (2.0, 4.0))):
        for tag, (pu, pv) in zip("abcd", phases):
            out[f"{fig}{tag}"] = SweepSpec("squeezed-coherent", dict(u=u, phi_u=pu, v=v, phi_v=pv), _ab_axes())
    for tag, beta in zip("abcd", (0.5, 1.0, 2.0, 4.0)):
        out[f"fig4{tag}"] = SweepSpec("squeezed-thermal", dict(beta=beta), _ab_axes())
    triples = [(0.5, 0.5, 1.0), (0.5, 1.0, 1.0), (1.5, 1.0, 1.0), (1.5, 1.0, 0.5)]
    for tag, (u1, u2, v1) in zip("abcd", triples):
        out[f"fig5{tag}"] = SweepSpec(
            "superposition",
            dict(u1=u1, u2=u2, v1=v1, v2=0.0),
            (Axis("r", 0.5, 1.0, 2), Axis("eta", 0.0, 2 * pi, 60, endpoint=False)),
        )
    return out


PRESETS = _presets()


def env_cutoff() -> int | None:
    raw = os.environ.get(CUTOFF_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise InvalidParameter(f"{CUTOFF_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise InvalidParameter(f"{CUTOFF_ENV} must be >= 1, got {value}")
    return value


def make_cutoff(n_max: int | None, state) -> Cutoff | None:
    if n_max is None:
        return None
    a, b = getattr(state, "squeezes", (0.0, 0.0))
    return Cutoff(n_max, default_pad(a, b))


def evaluate_point(args) -> tuple:
    """One grid row: ``(Q, q1, q2, q3, method, flag)``; degenerate points give ``Q=None``."""
    family, params, n_max, cross_check = args
    state = build_state(family, params)
    try:
        res = invariant_mandel_q(state, make_cutoff(n_max, state), cross_check=cross_check, closed_form_tol=CROSS_CHECK_TOL)
    except ZeroIntensity:
        return None, None, None, None, "", "undefined"
    q = res.q_bar
    return res.q_min, q[0], q[1], q[2], res.method, "true" if res.degenerate else "false"


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[tuple]:
    """Evaluate every grid point; rows come back in specification order."""
    n_max = spec.cutoff if spec.cutoff is not None else env_cutoff()
    tasks = [(spec.family, p, n_max, spec.cross_check) for p in spec.points()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(evaluate_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [evaluate_point(t) for t in tasks]
    axis_names = [ax.name for ax in spec.axes]
    return [tuple(p[n] for n in axis_names) + r for p, r in zip(spec.points(), results)]


def sweep_columns(spec: SweepSpec) -> list[str]:
    return [ax.name for ax in spec.axes] + ["Q", "q1", "q2", "q3", "method", "degenerate_flag"]


def format_csv(spec: SweepSpec, rows: list[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(sweep_columns(spec))
    for row in rows:
        w.writerow(["" if x is None else _fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def sweep_metadata(spec: SweepSpec) -> dict:
    n_max = spec.cutoff if spec.cutoff is not None else env_cutoff()
    meta = {
        "family": spec.family,
        "fixed": spec.fixed,
        "axes": [ax.as_dict() for ax in spec.axes],
        "cutoff": n_max if n_max is not None else "auto",
        "version": __version__,
        "tolerances": {
            "cutoff_convergence": CONVERGENCE_TOL,
            "degeneracy": DEGENERACY_TOL,
            "cross_check": CROSS_CHECK_TOL if spec.cross_check else None,
        },
    }
    if {"a", "b"} & {ax.name for ax in spec.axes}:
        meta["note"] = AXIS_RANGE_NOTE
    return meta


def format_json(spec: SweepSpec, rows: list[tuple]) -> str:
    def cell(x):
        if isinstance(x, float):
            return x + 0.0 if x == 0 else x
        return x

    doc = {
        "metadata": sweep_metadata(spec),
        "columns": sweep_columns(spec),
        "rows": [[cell(x) for x in row] for row in rows],
    }
    return json.dumps(doc, indent=1) + "\n"


# ------------------------------------------------------------- reporting


def format_result(res) -> str:
    q = res.q_bar
    lines = [
        f"Q = {res.q_min:.6f} ({res.q_min!r})",
        f"q_bar = ({_fmt(q[0])}, {_fmt(q[1])}, {_fmt(q[2])})",
        f"theta_bar = {_fmt(res.theta)}, phi_bar = {_fmt(res.phi)}",
        f"alpha_bar = ({res.alpha_bar[0]:.12g}, {res.alpha_bar[1]:.12g})",
        f"method = {res.method}",
        f"degenerate = {'true' if res.degenerate else 'false'}",
    ]
    for key in sorted(res.diagnostics):
        lines.append(f"  {key} = {res.diagnostics[key]}")
    return "\n".join(lines)


def _point_state(ns):
    fam = ns.family
    if fam == "fock":
        return Fock(ns.n1, ns.n2)
    if fam == "squeezed-coherent":
        return SqueezedCoherent(ns.z1, ns.z2, ns.a, ns.b)
    if fam == "squeezed-thermal":
        return SqueezedThermal(ns.beta, ns.a, ns.b)
    return CoherentSuperposition(ns.u1, ns.u2, ns.v1, ns.v2, ns.r, ns.eta)


def cmd_point(ns, out) -> int:
    state = _point_state(ns)
    n_max = ns.cutoff if ns.cutoff is not None else env_cutoff()
    res = invariant_mandel_q(state, make_cutoff(n_max, state), cross_check=ns.cross_check)
    print(format_result(res), file=out)
    return 0


def cmd_custom(ns, out) -> int:
    state = load_density(ns.path)
    res = invariant_mandel_q(state)
    print(format_result(res), file=out)
    return 0


def cmd_sweep(ns, out) -> int:
    if ns.preset:
        if ns.family or ns.set or ns.axis:
            raise InvalidParameter("--preset cannot be combined with a family, --set or --axis")
        base = PRESETS[ns.preset]
        spec = SweepSpec(base.family, base.fixed, base.axes, ns.cutoff, ns.cross_check, ns.format)
    else:
        if not ns.family:
            raise InvalidParameter("sweep needs --preset or a family")
        spec = SweepSpec(ns.family, dict(ns.set or []), tuple(ns.axis or ()), ns.cutoff, ns.cross_check, ns.format)
    rows = run_sweep(spec, ns.jobs)
    text = format_csv(spec, rows) if spec.fmt == "csv" else format_json(spec, rows)
    if ns.output:
        with open(ns.output, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def fibonacci_directions(n: int) -> list[tuple[float, float]]:
    """``n`` well-spread ``(theta, phi)`` pairs."""
    golden = math.pi * (3 - math.sqrt(5))
    out = []
    for k in range(n):
        z = 1 - (2 * k + 1) / n
        out.append((math.acos(z), (k * golden) % (2 * math.pi)))
    return out


def default_grid(family: str, points: int, seed: int) -> list[tuple[tuple, tuple[float, float]]]:
    """Closed-form parameter tuples paired with directions; at least ``points`` entries."""
    rng = np.random.default_rng(seed)
    if family == "fock":
        params = [(n1, n2) for n1 in range(5) for n2 in range(5) if n1 + n2 > 0]
        n_dirs = max(10, math.ceil(points / len(params)))
        return [(p, d) for p in params for d in fibonacci_directions(n_dirs)]
    if family == "superposition":
        triples = [(0.5, 0.5, 1.0), (0.5, 1.0, 1.0), (1.5, 1.0, 1.0), (1.5, 1.0, 0.5)]
        n_eta = max(2, math.ceil(points / (len(triples) * 2 * 3)))
        etas = np.linspace(0, 2 * math.pi, n_eta, endpoint=False)
        params = [(u1, u2, v1, r, float(eta)) for u1, u2, v1 in triples for r in (0.5, 1.0) for eta in etas]
        dirs = fibonacci_directions(3 * len(params))
        return [(p, dirs[3 * i + k]) for i, p in enumerate(params) for k in range(3)]
    dirs = fibonacci_directions(points)
    grid = []
    for d in dirs:
        if family == "squeezed-thermal":
            p = (float(rng.uniform(0.5, 4.0)), *map(float, rng.uniform(0, 0.5, 2)))
        else:
            p = (
                float(rng.uniform(0, 3)),
                float(rng.uniform(0, 2 * math.pi)),
                float(rng.uniform(0, 3)),
                float(rng.uniform(0, 2 * math.pi)),
                *map(float, rng.uniform(0, 0.6, 2)),
            )
        grid.append((p, d))
    return grid


def cmd_validate(ns, out) -> int:
    reading = ns.reading or closed_forms.default_reading(ns.family)
    ledger = closed_forms.DiscrepancyLedger()
    counts = {"Match": 0, "Mismatch": 0}
    worst = 0.0
    for params, direction in default_grid(ns.family, ns.points, ns.seed):
        rep = closed_forms.validate_closed_form(ns.family, params, direction, reading=reading, tol=ns.tol)
        counts[rep.verdict] += 1
        worst = max(worst, rep.abs_diff)
        ledger.record(rep)
    print(f"family = {ns.family}, reading = {reading}, tolerance = {ns.tol}", file=out)
    print(f"Match = {counts['Match']}, Mismatch = {counts['Mismatch']}, worst |diff| = {worst:.3g}", file=out)
    if ns.family in closed_forms.OPEN_MISMATCHES and counts["Mismatch"]:
        print(f"open mismatch: {closed_forms.OPEN_MISMATCHES[ns.family]}", file=out)
    if ns.ledger:
        ledger.to_json(ns.ledger)
        print(f"ledger written to {ns.ledger} ({len(ledger)} entries)", file=out)
    return 4 if counts["Mismatch"] else 0


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_int(text: str) -> int:
    value = _nonneg_int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mandelq", description="Invariant two-mode Mandel parameter.")
    p.add_argument("--version", action="version", version=f"mandelq {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    point = sub.add_parser("point", help="evaluate a single state")
    fams = point.add_subparsers(dest="family", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--cutoff", type=_positive_int, help=f"photons per mode (default: auto, or ${CUTOFF_ENV})")
        sp.add_argument("--cross-check", action="store_true", help="also minimise the closed form on a grid")

    f = fams.add_parser("fock")
    f.add_argument("--n1", type=_nonneg_int, required=True)
    f.add_argument("--n2", type=_nonneg_int, required=True)
    common(f)
    f = fams.add_parser("squeezed-coherent", help="complex displacements as 1+2j or 3@pi/4")
    f.add_argument("--z1", type=parse_complex, required=True)
    f.add_argument("--z2", type=parse_complex, required=True)
    f.add_argument("--a", type=parse_real, required=True)
    f.add_argument("--b", type=parse_real, required=True)
    common(f)
    f = fams.add_parser("squeezed-thermal")
    f.add_argument("--beta", type=parse_real, required=True)
    f.add_argument("--a", type=parse_real, required=True)
    f.add_argument("--b", type=parse_real, required=True)
    common(f)
    f = fams.add_parser("superposition")
    for name in ("u1", "u2", "v1", "v2", "r", "eta"):
        f.add_argument(f"--{name}", type=parse_real, required=name != "v2", default=0.0)
    common(f)

    sw = sub.add_parser("sweep", help="evaluate a parameter grid")
    sw.add_argument("family", nargs="?", choices=tuple(SWEEP_PARAMS))
    sw.add_argument("--preset", choices=tuple(PRESETS))
    sw.add_argument("--set", type=parse_setting, action="append", metavar="NAME=VALUE")
    sw.add_argument("--axis", type=parse_axis, action="append", metavar="NAME=MIN:MAX:STEPS[:open]")
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.add_argument("-o", "--output")
    sw.add_argument("--jobs", type=_positive_int, default=1)
    common(sw)

    cu = sub.add_parser("custom", help="evaluate a density matrix file")
    cu.add_argument("path")

    va = sub.add_parser("validate", help="compare a closed form with the Fock-space oracle")
    va.add_argument("family", choices=closed_forms.FAMILIES)
    va.add_argument("--points", type=_positive_int, default=100)
    va.add_argument("--seed", type=int, default=0)
    va.add_argument("--reading", choices=("printed", "resolved"))
    va.add_argument("--tol", type=float, default=closed_forms.CLOSED_FORM_TOL)
    va.add_argument("--ledger", help="write mismatching points as JSON")
    return p


COMMANDS = {"point": cmd_point, "sweep": cmd_sweep, "custom": cmd_custom, "validate": cmd_validate}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ns = build_parser().parse_args(argv)
    try:
        return COMMANDS[ns.command](ns, out)
    except MandelQError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return 0


if __name__ == "__main__":
    sys.exit(main())
