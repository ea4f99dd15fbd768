"""Command-line driver: ``lpns run``, ``lpns calibrate-epsilon`` and ``lpns report``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
error, 3 the solver blew up (a partial report is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .calibration import CURVE_HEADER, calibrate_epsilon
from .report import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    format_report,
    load_config,
    read_report,
    write_csv,
)
from .suites import SUITE_FUNCS

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3
REPORT_NAME = "report.json"
CALIBRATION_REPORT_NAME = "calibration_report.json"
CALIBRATION_CURVE_NAME = "calibration_curve.csv"
TIMING_NAME = "timing.json"

log = logging.getLogger("lpns")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--n", type=int, help="grid points per direction (power of two)")
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--record-stride", type=int, help="record every k steps")
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--suite", help="partition | bernstein | lorentz | embedding | paraproduct | solver | apriori | hardy-young | all")
    p.add_argument("--init", help="initial data: abc | random-band | single-mode")
    p.add_argument("--amplitude", type=float, help="max |u0| on the grid")
    p.add_argument("--out-dir", help="directory for reports and CSV series")
    p.add_argument("--parallel-seeds", type=int, help="worker processes for independent seeds")
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="any other config key (repeatable)"
    )
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpns", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the selected verification suites")
    _add_common(p_run)
    p_cal = sub.add_parser("calibrate-epsilon", help="calibrate the empirical smallness threshold")
    _add_common(p_cal)
    p_rep = sub.add_parser("report", help="pretty-print a saved report")
    p_rep.add_argument("path", help="report.json or a directory holding one")
    p_rep.add_argument("--json", action="store_true", help="print the raw document")
    return parser


_FLAG_KEYS = ("n", "T", "dt", "record_stride", "seed", "suite", "init", "amplitude", "out_dir", "parallel_seeds")


def config_from_args(args: argparse.Namespace, environ=None) -> ExperimentConfig:
    flags = {k: getattr(args, k) for k in _FLAG_KEYS}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        flags[key.strip()] = value
    return load_config(args.config, flags, environ)


def _write_timing(out_dir: Path, seconds: float, parts: dict[str, float]):
    doc = {"wall_clock_s": round(seconds, 3), "suites_s": {k: round(v, 3) for k, v in parts.items()}}
    (out_dir / TIMING_NAME).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_run(config: ExperimentConfig) -> int:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = ExperimentReport(config)
    timings: dict[str, float] = {}
    start = time.perf_counter()
    for name in config.suites:
        t0 = time.perf_counter()
        log.info("suite %s", name)
        out = SUITE_FUNCS[name](config)
        timings[name] = time.perf_counter() - t0
        report.extend(out.checks)
        report.constants.update(out.constants)
        for fname, (header, rows) in sorted(out.series.items()):
            write_csv(out_dir / fname, header, rows)
            report.series.append(fname)
        failed = sum(not c.passed for c in out.checks)
        print(f"{name}: {len(out.checks) - failed}/{len(out.checks)} checks passed")
        if out.status == "blowup":
            report.status = "blowup"
            break
    report.write(out_dir / REPORT_NAME)
    _write_timing(out_dir, time.perf_counter() - start, timings)
    print(f"report written to {out_dir / REPORT_NAME}")
    if report.status == "blowup":
        print("solver blow-up; partial report written", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_calibrate(config: ExperimentConfig) -> int:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    cal = calibrate_epsilon(config)
    write_csv(out_dir / CALIBRATION_CURVE_NAME, CURVE_HEADER, cal.curve_rows())
    report = ExperimentReport(config, series=[CALIBRATION_CURVE_NAME])
    report.extend(cal.checks())
    report.constants["eps_emp"] = cal.epsilon
    report.constants["eps_open"] = cal.is_open
    fail_amp = cal.failing_amplitude
    report.constants["failing_amplitude"] = fail_amp if fail_amp is not None else "none"
    report.write(out_dir / CALIBRATION_REPORT_NAME)
    _write_timing(out_dir, time.perf_counter() - start, {"calibration": time.perf_counter() - start})
    flag = " (open: no failing amplitude in range, lower bound only)" if cal.is_open else ""
    print(f"eps_emp = {cal.epsilon:.6g}{flag}")
    print(f"curve written to {out_dir / CALIBRATION_CURVE_NAME}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_report(path: str, raw: bool = False) -> int:
    p = Path(path)
    if p.is_dir():
        candidates = [p / REPORT_NAME, p / CALIBRATION_REPORT_NAME]
        p = next((c for c in candidates if c.exists()), candidates[0])
    try:
        doc = read_report(p)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read report {p}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(doc, indent=2, sort_keys=True) if raw else format_report(doc))
    return EXIT_OK if doc.get("passed", False) else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "report":
        return cmd_report(args.path, args.json)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"lpns: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "run":
        return cmd_run(config)
    return cmd_calibrate(config)


if __name__ == "__main__":
    sys.exit(main())
