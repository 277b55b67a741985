"""`lab` command line: run configured experiments and write reports.

Exit codes: 0 all verdicts pass, 2 configuration error, 3 point budget
exceeded, 4 an experiment failed its verdict or raised a module error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import BudgetExceeded, ConfigError, DegenerateDisk, DisksOverlap, LabError
from ..group import export_catalog
from ..measure import export_measure_csv
from ..reports import _jsonable
from .config import ExperimentConfig, load_config
from .experiments import ORDER, REGISTRY, Session

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_FAIL = 0, 2, 3, 4

log = logging.getLogger("lab")


def reference_config_text() -> str:
    return resources.files("hyplab.lab").joinpath("reference.ini").read_text(encoding="utf-8")


def versions() -> dict:
    return {"hyplab": __version__, "numpy": np.__version__, "python": sys.version.split()[0]}


def new_run_dir(root) -> Path:
    root = Path(root)
    stamp = dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    path = root / f"run-{stamp}"
    k = 1
    while path.exists():
        path = root / f"run-{stamp}-{k}"
        k += 1
    path.mkdir(parents=True)
    return path


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def execute(cfg: ExperimentConfig, selection=None) -> tuple[int, Path]:
    """Run the selected experiments in dependency order; returns (exit code, run dir)."""
    selection = set(selection or cfg.experiments)
    try:
        session = Session(cfg)
    except (DisksOverlap, DegenerateDisk) as exc:
        raise ConfigError(f"group spec rejected: {exc}") from exc
    out_dir = new_run_dir(cfg.output_dir)
    resolved = cfg.to_dict()
    summary = {"config": resolved, "versions": versions(), "run_dir": str(out_dir), "experiments": {}}
    code = EXIT_OK
    for name in ORDER:
        if name not in selection:
            continue
        log.info("running %s", name)
        try:
            reports = REGISTRY[name](session)
        except BudgetExceeded as exc:
            summary["experiments"][name] = {"pass": False, "error": f"BudgetExceeded: {exc}"}
            code = EXIT_BUDGET
            break
        except LabError as exc:
            summary["experiments"][name] = {"pass": False, "error": f"{type(exc).__name__}: {exc}"}
            code = max(code, EXIT_FAIL)
            continue
        for key, report in reports:
            doc = report.to_dict()
            doc["config"] = resolved
            doc["versions"] = versions()
            _write(out_dir / f"{key}.json", json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
            _write(out_dir / f"{key}.csv", report.to_csv())
            summary["experiments"][key] = {"pass": report.passed}
            if not report.passed:
                code = max(code, EXIT_FAIL)
        if name == "orbit":
            export_catalog(session.catalog, out_dir / "catalog.txt")
        if name == "measure":
            export_measure_csv(session.mu, out_dir / "measure.csv")
    summary["exit_code"] = code
    _write(out_dir / "summary.json", json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return code, out_dir


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.command == "run":
        raise ConfigError("lab run needs --config")
    else:
        cfg = ExperimentConfig()
    rho = tuple(args.rho) if args.rho else None
    return cfg.override(
        max_dist=args.max_dist,
        bin_count=args.bins,
        point_cap=args.point_cap,
        output_dir=args.out,
        seed=args.seed,
        rho=rho,
        threads=args.threads,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Orbit, boundary measure and equidistribution experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", *ORDER):
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI-style config file (required for run)")
        p.add_argument("--max-dist", type=float)
        p.add_argument("--bins", type=int)
        p.add_argument("--rho", type=float, nargs="+")
        p.add_argument("--point-cap", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out", help="output root for run directories")
    sub.add_parser("example-config", help="print the shipped reference config")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "example-config":
        sys.stdout.write(reference_config_text())
        return EXIT_OK
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    selection = None if args.command == "run" else [args.command]
    try:
        code, out_dir = execute(cfg, selection)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
    for key, res in summary["experiments"].items():
        print(f"{key:28s} {'pass' if res['pass'] else 'FAIL'}{'  ' + res['error'] if 'error' in res else ''}")
    print(f"reports: {out_dir}")
    if code == EXIT_BUDGET:
        print("budget exceeded", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
