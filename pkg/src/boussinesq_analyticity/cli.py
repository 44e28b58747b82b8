"""Command-line entry points.

Failures print one line ``error: <category>: <message>`` to stderr and exit
nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds, harness
from .analyticity import fit_radius_shell
from .dynamics import SimulationError
from .spectral import NOISE_FLOOR

EXIT_CODES = {
    "config_not_found": 2,
    "config_invalid": 2,
    "input_not_found": 2,
    "input_invalid": 3,
    "report_not_found": 2,
    "report_invalid": 3,
    "calibration_failed": 4,
    "simulation_failed": 5,
    "unresolved_data": 5,
    "output_unwritable": 6,
    "self_test_failed": 7,
}


class CLIError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise CLIError("config_not_found", f"no such config file: {path}")
    try:
        config = harness.load_config(path)
    except ValueError as exc:
        raise CLIError("config_invalid", str(exc)) from exc
    try:
        report = harness.run_experiment(config)
    except bounds.UnresolvedDataError as exc:
        raise CLIError("unresolved_data", str(exc)) from exc
    try:
        out = harness.emit_outputs(report)
    except OSError as exc:
        raise CLIError("output_unwritable", str(exc)) from exc
    summary = report.verdict_summary()
    print(
        f"termination={report.termination} snapshots={len(report.snapshots)} "
        f"A={report.A:g} B={report.B:.6g} C0={report.C0} C1={report.C1} "
        f"verdict={summary['overall']} output={out}"
    )
    if report.termination != "completed":
        raise CLIError("simulation_failed", f"{report.termination} at t={report.termination_time}: {report.message}")
    return 0


def _cmd_verify_lemma(args) -> int:
    try:
        rep = bounds.verify_combinatorial(args.order_max, args.dim)
    except ValueError as exc:
        raise CLIError("input_invalid", str(exc)) from exc
    print(f"C={rep.constant!r} dim={rep.dim} order_max={rep.order_max} growth={rep.growth:.3e} saturated={rep.saturated}")
    for n, c in enumerate(rep.per_order, 1):
        print(f"  |alpha|={n:2d}  ratio={c!r}")
    return 0


def read_spectrum_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    shells, amps = [], []
    first = True
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                j, a = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if first:
                    first = False
                    continue  # header
                raise
            first = False
            shells.append(j)
            amps.append(a)
    return np.array(shells), np.array(amps)


def _cmd_estimate_radius(args) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise CLIError("input_not_found", f"no such spectrum file: {path}")
    try:
        shells, amps = read_spectrum_csv(path)
        est = fit_radius_shell(shells, amps, args.noise_floor)
    except (ValueError, IndexError) as exc:
        raise CLIError("input_invalid", str(exc)) from exc
    print(json.dumps(est.to_dict(), sort_keys=True))
    return 0


def calibrate_from_report(data: dict) -> bounds.Calibration:
    snaps = data["snapshots"]
    consts = data["constants"]
    cfg = data["config"]
    integrand = bounds.IntegrandSeries(
        np.array([s["t"] for s in snaps]),
        np.array([1.0 + s["grad_u_sup"] + s["grad_theta_sup"] for s in snaps]),
    )
    hk = [s["hk_pair_norm"] for s in snaps]
    cascades = [(s["t"], [(int(n), v) for n, v in s["cascade"]]) for s in snaps]
    return bounds.calibrate_constants(hk, cascades, integrand, consts["A"], consts["B"], cfg["k"], 2)


def _cmd_calibrate(args) -> int:
    path = Path(args.report)
    if not path.is_file():
        raise CLIError("report_not_found", f"no such report: {path}")
    try:
        data = json.loads(path.read_text())
        cal = calibrate_from_report(data)
    except bounds.CalibrationError as exc:
        raise CLIError("calibration_failed", str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise CLIError("report_invalid", f"{type(exc).__name__}: {exc}") from exc
    print(f"C0={cal.C0!r} C1={cal.C1!r} C0_gronwall_fit={cal.lemma_fit!r} min_margin={cal.min_margin!r}")
    return 0


def _cmd_self_test(args) -> int:
    from .selftest import run_self_test

    failures = run_self_test(verbose=not args.quiet)
    if failures:
        raise CLIError("self_test_failed", f"{len(failures)} check(s) failed: {', '.join(failures)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boussinesq-analyticity", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a key = value config file")
    r.add_argument("--config", required=True)
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("verify-lemma", help="brute-force the majorant combinatorial inequality")
    v.add_argument("--order-max", type=int, required=True)
    v.add_argument("--dim", type=int, required=True)
    v.set_defaults(func=_cmd_verify_lemma)

    e = sub.add_parser("estimate-radius", help="shell fit on a two-column spectrum CSV")
    e.add_argument("--input", required=True)
    e.add_argument("--noise-floor", type=float, default=NOISE_FLOOR)
    e.set_defaults(func=_cmd_estimate_radius)

    c = sub.add_parser("calibrate", help="recalibrate C0, C1 from a stored report.json")
    c.add_argument("--report", required=True)
    c.set_defaults(func=_cmd_calibrate)

    s = sub.add_parser("self-test", help="run the built-in example checks")
    s.add_argument("-q", "--quiet", action="store_true")
    s.set_defaults(func=_cmd_self_test)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except SimulationError as exc:
        print(f"error: simulation_failed: {exc}", file=sys.stderr)
        return EXIT_CODES["simulation_failed"]


if __name__ == "__main__":
    sys.exit(main())
