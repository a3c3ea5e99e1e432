"""Command-line interface.

Exit codes: 0 success, 1 invariant or verification failure, 2 usage or
configuration error. Relative ``--output`` paths are resolved against
``$SPINPROD_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, schemes, verify
from .exceptions import SpinprodError
from .qcore import StateVector, purity

OUTPUT_DIR_ENV = "SPINPROD_OUTPUT_DIR"

PRESETS = {
    "zero-zero": StateVector.from_label("00"),
    "bell-phi+": StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2)),
    "bell-psi+": StateVector(np.array([0, 1, 1, 0]) / np.sqrt(2)),
    "plus-plus": StateVector.from_label("++"),
}


class ConfigError(Exception):
    """Bad command-line configuration (exit code 2)."""


ZERO_SNAP = 1e-14


def fmt(x: float) -> str:
    """12 significant digits; magnitudes below ``ZERO_SNAP`` print as 0."""
    x = float(x)
    if abs(x) < ZERO_SNAP:
        x = 0.0
    return f"{x:.12g}"


def _num(x: float) -> float:
    return float(fmt(x))


def _complex_pair(z: complex) -> list[float]:
    return [_num(z.real), _num(z.imag)]


def resolve_input(args: argparse.Namespace) -> tuple[str, StateVector]:
    if args.amplitudes is not None:
        vals = np.asarray(args.amplitudes, dtype=float)
        vec = vals[0::2] + 1j * vals[1::2]
        if np.linalg.norm(vec) == 0:
            raise ConfigError("input amplitudes must not all be zero")
        return "custom", StateVector(vec / np.linalg.norm(vec))
    if args.input not in PRESETS:
        raise ConfigError(f"unknown input preset {args.input!r}; choose from {', '.join(PRESETS)}")
    return args.input, PRESETS[args.input]


def _angle(args: argparse.Namespace, value: float | None) -> float | None:
    if value is None:
        return None
    return math.radians(value) if args.deg else float(value)


def _open_output(path: str | None):
    if path is None:
        return None
    target = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not target.is_absolute():
        target = Path(base) / target
    return target


def _emit(text: str, path: str | None) -> None:
    target = _open_output(path)
    if target is None:
        sys.stdout.write(text)
        return
    try:
        with open(target, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write output {target}: {exc.strerror}") from None


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _run_scheme(args: argparse.Namespace, psi: StateVector) -> schemes.SchemeRun:
    theta = _angle(args, args.theta)
    if args.scheme == "nmem":
        if theta is None:
            raise ConfigError("--theta is required for the nmem scheme")
        phi = _angle(args, args.phi) or 0.0
        try:
            meter = schemes.MeterSpec(theta, phi)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return schemes.run_nmem(meter, psi)
    if args.scheme == "mem":
        theta1, theta2 = _angle(args, args.theta1), _angle(args, args.theta2)
        if theta1 is None or theta2 is None:
            raise ConfigError("--theta1 and --theta2 are required for the mem scheme")
        return schemes.run_mem(theta1, theta2, psi)
    if theta is None:
        raise ConfigError("--theta is required for the erasure scheme")
    return schemes.run_erasure(theta, psi)


def _check_run(run: schemes.SchemeRun) -> None:
    total = sum(o.probability for o in run.outcome_table.values())
    if abs(total - run.success_probability) > 1e-10:
        raise SpinprodError(f"branch probabilities sum to {total}, expected {run.success_probability}")
    for out in run.outcome_table.values():
        if out.possible:
            out.state.validate()


def simulation_report(run: schemes.SchemeRun, input_name: str) -> dict:
    """JSON-ready report of a scheme run (the documented ``simulate`` schema)."""
    theta = run.params["theta"]
    outcomes = []
    for r, out in run.global_outcomes(conditional=True).items():
        entry = {"outcome": r, "probability": _num(out.probability)}
        if out.possible:
            entry["purity"] = _num(purity(out.state))
            entry["state"] = [[_complex_pair(z) for z in row] for row in out.state.matrix]
        else:
            entry["purity"] = None
            entry["state"] = None
        outcomes.append(entry)
    return {
        "scheme": run.scheme.value,
        "parameters": {k: _num(v) for k, v in run.params.items()},
        "strength": _num(np.cos(2 * theta)),
        "input": {"name": input_name, "amplitudes": [_complex_pair(z) for z in run.input_state.amplitudes]},
        "success_probability": _num(run.success_probability),
        "local_outcomes": [
            {"label": label, "global": run.rule(label), "probability": _num(out.probability)}
            for label, out in run.outcome_table.items()
        ],
        "outcomes": outcomes,
        "delta_gamma": _num(run.delta_gamma()),
    }


def cmd_simulate(args: argparse.Namespace) -> int:
    name, psi = resolve_input(args)
    run = _run_scheme(args, psi)
    _check_run(run)
    report = simulation_report(run, name)
    if args.format == "json":
        text = _json(report)
    else:
        tail = [fmt(report["success_probability"]), fmt(report["delta_gamma"])]
        rows = [
            [str(o["outcome"]), fmt(o["probability"]), "" if o["purity"] is None else fmt(o["purity"]), *tail]
            for o in report["outcomes"]
        ]
        text = _csv(["outcome", "probability", "purity", "success_probability", "delta_gamma"], rows)
    _emit(text, args.output)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.cases < 1:
        raise ConfigError("--cases must be positive")
    results = verify.run_suites(seed=args.seed, cases=args.cases, tolerance=args.tolerance)
    if args.format == "json":
        text = _json(
            {
                "seed": args.seed,
                "suites": [
                    {"name": r.name, "passed": r.passed, "max_residual": float(f"{r.residual:.3e}"), "tolerance": r.tolerance}
                    for r in results
                ],
            }
        )
    else:
        text = verify.format_report(results)
    _emit(text, args.output)
    return 0 if all(r.passed for r in results) else 1


def cmd_sweep_noise(args: argparse.Namespace) -> int:
    grid_c, grid_s = args.grid
    if grid_c < 2 or grid_s < 2:
        raise ConfigError("--grid resolutions must be at least 2")
    points = analysis.noise_surface(grid_c, grid_s)
    if args.format == "json":
        text = _json(
            [
                {
                    "concurrence": _num(p.concurrence),
                    "strength": _num(p.strength),
                    "phi": None if p.phi is None else _num(p.phi),
                    "delta_gamma": None if p.delta_gamma is None else _num(p.delta_gamma),
                    "feasible": p.feasible,
                }
                for p in points
            ]
        )
    else:
        rows = [
            [
                fmt(p.concurrence),
                fmt(p.strength),
                "" if p.phi is None else fmt(p.phi),
                "" if p.delta_gamma is None else fmt(p.delta_gamma),
                "true" if p.feasible else "false",
            ]
            for p in points
        ]
        text = _csv(["concurrence", "strength", "phi", "delta_gamma", "feasible"], rows)
    _emit(text, args.output)
    return 0


def cmd_strength_law(args: argparse.Namespace) -> int:
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    tol = 1e-10 if args.tolerance is None else args.tolerance
    rows = []
    ok = True
    for theta in np.linspace(0.0, np.pi / 4, args.points):
        meter = schemes.MeterSpec(theta)
        c = schemes.meter_concurrence(meter)
        s = analysis.simulated_strength(meter)
        ok &= abs(c - s) <= tol
        rows.append({"theta": _num(theta), "concurrence": _num(c), "strength": _num(s), "residual": float(f"{abs(c - s):.3e}")})
    if args.format == "json":
        text = _json(rows)
    else:
        text = _csv(list(rows[0]), [[fmt(v) for v in row.values()] for row in rows])
    _emit(text, args.output)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinprod", description="Nonlocal spin-product measurement simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format):
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        p.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
        p.add_argument("--tolerance", type=float, default=None, help="override every check tolerance")
        p.add_argument("--seed", type=int, default=0)

    sim = sub.add_parser("simulate", help="run one scheme on one input state")
    sim.add_argument("--scheme", choices=("nmem", "mem", "erasure"), required=True)
    sim.add_argument("--theta", type=float, help="meter angle (nmem, erasure)")
    sim.add_argument("--phi", type=float, help="meter phase (nmem)")
    sim.add_argument("--theta1", type=float, help="Alice's rotation (mem)")
    sim.add_argument("--theta2", type=float, help="Bob's rotation (mem)")
    sim.add_argument("--input", default="plus-plus", help=f"preset: {', '.join(PRESETS)}")
    sim.add_argument("--amplitudes", type=float, nargs=8, metavar="X", help="re0 im0 re1 im1 re2 im2 re3 im3")
    sim.add_argument("--deg", action="store_true", help="angles are given in degrees")
    common(sim, "json")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run the invariant suites")
    ver.add_argument("--cases", type=int, default=2000, help="randomized cases per suite")
    ver.add_argument("--format", choices=("text", "json"), default="text")
    ver.add_argument("--output", "-o", default=None)
    ver.add_argument("--tolerance", type=float, default=None)
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)

    sw = sub.add_parser("sweep-noise", help="purity-degradation surface over (concurrence, strength)")
    sw.add_argument("--grid", type=int, nargs=2, default=(101, 101), metavar=("N_C", "N_S"))
    common(sw, "csv")
    sw.set_defaults(func=cmd_sweep_noise)

    sl = sub.add_parser("strength-law", help="meter concurrence vs simulated strength over a theta grid")
    sl.add_argument("--points", type=int, default=50)
    common(sl, "csv")
    sl.set_defaults(func=cmd_strength_law)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"spinprod: error: {exc}", file=sys.stderr)
        return 2
    except SpinprodError as exc:
        print(f"spinprod: invariant violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
