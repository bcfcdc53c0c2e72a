"""Experiment runner CLI: `thermoplate run <config.json>` and `thermoplate list`.

A config is a JSON tree (see experiments._DEFAULTS for the shape).  A run
executes one named experiment, writes one CSV per measured curve plus a JSON
manifest echoing the config, the toolkit version, wall-clock time and every
assertion with its measured/expected values.  The exit status is 0 iff all
assertions pass.

Floating point is printed with 17 significant digits, so identical configs
reproduce byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import ExperimentConfig, list_experiments, run_experiment


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)) or (hasattr(value, "dtype") and
                                     getattr(value, "dtype", None) is not None
                                     and value.dtype.kind in "iu"):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def run_config(config_path: str, out_dir: str | None = None,
               allow_horizon_violation: bool = False,
               threads: int | None = None) -> int:
    with open(config_path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    cfg = ExperimentConfig.from_dict(raw)
    out = Path(out_dir or raw.get("out", "results"))
    out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    result = run_experiment(cfg, allow_horizon_violation=allow_horizon_violation,
                            threads=threads)
    wall = time.perf_counter() - start

    csv_files = []
    for name, (header, rows) in result.tables.items():
        path = out / f"{name}.csv"
        write_csv(path, header, rows)
        csv_files.append(str(path))

    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.raw,
        "toolkit_version": __version__,
        "wall_clock_seconds": wall,
        "csv_files": csv_files,
        "assertions": [
            {"name": a.name, "measured": a.measured, "expected": a.expected,
             "tolerance": a.tolerance, "comparison": a.comparison,
             "passed": a.passed, "note": a.note}
            for a in result.assertions
        ],
        "records": result.records,
        "all_passed": all(a.passed for a in result.assertions),
    }
    manifest_path = out / f"{cfg.experiment}_manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=float)
        fh.write("\n")

    for a in result.assertions:
        status = "PASS" if a.passed else "FAIL"
        print(f"{status} {a.name}: measured={a.measured:.6g} "
              f"expected={a.expected:.6g} tol={a.tolerance:.3g}")
    print(f"manifest: {manifest_path}")
    return 0 if manifest["all_passed"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="thermoplate",
        description="Run spectral experiments for the damped thermoelastic "
                    "plate system and write CSV results plus a manifest.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config", help="path to the JSON experiment config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads for per-mode factorisations")
    p_run.add_argument("--allow-horizon-violation", action="store_true",
                       help="run past the box's trustworthy time horizon")

    sub.add_parser("list", help="list the available experiments")

    args = parser.parse_args(argv)
    if args.command == "list":
        rows = list_experiments()
        width = max(len(name) for name, _ in rows)
        for name, desc in rows:
            print(f"{name.ljust(width)}  {desc}")
        return 0
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    return run_config(args.config, out_dir=args.out,
                      allow_horizon_violation=args.allow_horizon_violation,
                      threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
