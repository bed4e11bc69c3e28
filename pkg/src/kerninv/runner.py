"""Command line entry point: one experiment per invocation.

    kerninv <kind> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>] [--dump-grams]

Exit codes: 0 verdict passed, 1 usage or configuration error, 2 runtime
failure or failed verdict.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import KINDS, ConfigError, config_dict, format_config, parse_config
from .experiments import run_scaling_experiment, verdict

logger = logging.getLogger(__name__)

BASE_COLUMNS = ["level", "N", "h", "q", "rho", "constant", "raw_value", "predicted_exponent"]
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kerninv", description="Measure inverse-inequality constants and their scaling.")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", required=True, help="flat key = value file (docs/config.md)")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--threads", type=int, default=1, help="levels evaluated concurrently")
    p.add_argument("--dump-grams", action="store_true", help="write kernel Grams and extremizers as CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    return v


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def report_rows(report, results):
    rows = []
    if report.kind == "poincare":
        for i, case in enumerate(report.extras["cases"]):
            rows.append({"level": i, "N": None, "h": None, "q": None, "rho": None,
                         "constant": case["max_ratio"], "raw_value": case["max_ratio"],
                         "predicted_exponent": None, "p": case["p"], "delta": case["delta"],
                         "holds": case["holds"]})
        return rows
    for r in results:
        e = r.estimate
        row = {"level": r.level, "N": e.N, "h": e.h, "q": e.q, "rho": e.rho, "constant": e.constant,
               "raw_value": e.value, "predicted_exponent": report.predicted_exponent, "scale": r.scale}
        row.update(r.extras)
        rows.append(row)
    return rows


def write_outputs(out: Path, cfg, report, results, seed, dump_grams=False):
    out.mkdir(parents=True, exist_ok=True)
    rows = report_rows(report, results)
    columns = list(BASE_COLUMNS)
    for row in rows:
        columns += [k for k in row if k not in columns]
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])
    fit = report.fit
    summary = {
        "kind": report.kind,
        "version": __version__,
        "seed": seed,
        "config": config_dict(cfg),
        "config_text": format_config(cfg),
        "environment": {"python": platform.python_version(), "numpy": np.__version__,
                        "scipy": scipy.__version__},
        "scale": report.scale_name,
        "levels": rows,
        "predicted_exponent": report.predicted_exponent if report.kind != "poincare" else None,
        "tolerance": list(report.tolerance) if report.kind != "poincare" else None,
        "fit": None if fit is None else {"slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept},
        "complete": report.complete,
        "error": report.error,
        "extras": {k: v for k, v in report.extras.items() if k != "cases"},
        "verdict": "pass" if verdict(report) else "fail",
    }
    (out / "report.json").write_text(json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n")
    with open(out / "loglog.dat", "w") as fh:
        fh.write(f"# log({report.scale_name}) log(raw_value)\n")
        for r in results:
            fh.write(f"{math.log(r.scale)!r} {math.log(r.estimate.value)!r}\n")
    if dump_grams:
        gdir = out / "grams"
        gdir.mkdir(exist_ok=True)
        for r in results:
            for name, mat in r.grams.items():
                np.savetxt(gdir / f"level{r.level}_{name}.csv", mat, delimiter=",", fmt="%.17g")
    return summary


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("usage error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"usage error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    overrides = {} if args.seed is None else {"seed": args.seed}
    try:
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.kind != args.kind:
        print(f"usage error: config kind '{cfg.kind}' does not match '{args.kind}'", file=sys.stderr)
        return EXIT_USAGE
    try:
        report, results = run_scaling_experiment(cfg, threads=args.threads, keep_grams=args.dump_grams)
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    summary = write_outputs(Path(args.out), cfg, report, results, cfg.seed, args.dump_grams)
    fit = summary["fit"]
    if fit:
        print(f"{cfg.kind}: slope {fit['slope']:.4f} +- {fit['stderr']:.4f} "
              f"(predicted {report.predicted_exponent:g}, accepted {list(report.tolerance)})")
    if report.error:
        print(f"incomplete: {report.error}", file=sys.stderr)
    print(f"verdict: {summary['verdict']}")
    return EXIT_OK if summary["verdict"] == "pass" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
