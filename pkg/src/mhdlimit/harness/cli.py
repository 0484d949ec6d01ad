"""Command-line entry point.

Precedence: command-line flags > config file > built-in defaults.
Exit codes: 0 success, 2 config error, 3 invariant breach, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from ..dynamics import CFLViolation, DensityFloorError, NumericalFailure
from .config import ConfigError, ExperimentConfig, apply_overrides, config_from_dict, load_config

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NUMERICAL = 0, 2, 3, 4

_KIND_FOR = {"sweep": "sweep-lambda", "reconnect": "reconnect", "besov-check": "besov-check"}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mhdlimit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "sweep", "reconnect", "besov-check"):
        s = sub.add_parser(name)
        s.add_argument("config", nargs="?", help="YAML config file")
        s.add_argument("--output", dest="output.directory")
        s.add_argument("--n", dest="grid.n", type=int)
        s.add_argument("--dim", dest="grid.dim", type=int)
        s.add_argument("--dt", dest="time.dt", type=float)
        s.add_argument("--t-final", dest="time.t_final", type=float)
        s.add_argument("--stride", dest="output.stride", type=int)
        s.add_argument("--seed", dest="seed", type=int)
        s.add_argument("--mu", dest="physics.mu", type=float)
        s.add_argument("--lam", dest="physics.lam", type=float)
        s.add_argument("--eta", dest="physics.eta", type=float)
        if name == "simulate":
            s.add_argument("--solver", choices=("cmhd", "imhd"))
        if name == "sweep":
            s.add_argument("--workers", dest="sweep.workers", type=int)
    r = sub.add_parser("report", help="summarize a finished run directory")
    r.add_argument("directory")
    return p


def _config(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else config_from_dict({"time": {"dt": 1e-3}})
    overrides = {k: v for k, v in vars(args).items() if "." in k or k == "seed"}
    if args.command in _KIND_FOR:
        overrides["kind"] = _KIND_FOR[args.command]
    elif getattr(args, "solver", None):
        overrides["kind"] = f"simulate-{args.solver}"
    elif not base.kind.startswith("simulate"):
        overrides["kind"] = "simulate-imhd"
    return apply_overrides(base, overrides)


def _report(directory: Path) -> int:
    man = directory / "manifest.json"
    if not man.exists():
        print(f"no manifest in {directory}", file=sys.stderr)
        return EXIT_CONFIG
    doc = json.loads(man.read_text())
    print(f"kind: {doc['kind']}  config_hash: {doc['config_hash'][:16]}  outputs: {len(doc['outputs'])}")
    rates = directory / "rates.csv"
    if rates.exists():
        with open(rates) as fh:
            for row in csv.DictReader(fh):
                print(f"  {row['norm']:<22} slope {float(row['slope']):+.3f}  target {row['target']}  "
                      f"rms {float(row['residual']):.2e}")
    for cert in sorted(directory.glob("*/certificate.txt")):
        print(f"  {cert.parent.name}: {cert.read_text().splitlines()[-1]}")
    checks = directory / "besov_checks.csv"
    if checks.exists():
        with open(checks) as fh:
            for row in csv.DictReader(fh):
                print(f"  {row['check']:<26} {float(row['value']):.3e}  {'ok' if row['passed'] == 'true' else 'FAIL'}")
    return EXIT_OK


def main(argv=None) -> int:
    from .runs import InvariantBreach, run_besov_checks, run_reconnection, run_simulation, run_sweep

    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "report":
        return _report(Path(args.directory))
    try:
        cfg = _config(args)
        if args.command == "simulate":
            res = run_simulation(cfg)
            print(json.dumps(res.summary, sort_keys=True))
        elif args.command == "sweep":
            res = run_sweep(cfg)
            for name, fit in res.fits.items():
                print(f"{name}: slope {fit.slope:+.4f} (target {fit.target}) rms {fit.residual:.2e}")
        elif args.command == "reconnect":
            outcomes, _ = run_reconnection(cfg)
            for o in outcomes:
                print(f"n={o.n}: hyperbolic nulls {o.counts[0]} -> {o.counts[1]}; "
                      f"{'certified' if o.certified else 'no certificate'}")
        else:
            rows, _ = run_besov_checks(cfg)
            for r in rows:
                print(f"{r.name}: {r.value:.3e} {'ok' if r.passed else 'FAIL'}")
            if not all(r.passed for r in rows):
                return EXIT_INVARIANT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantBreach as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (NumericalFailure, DensityFloorError, CFLViolation, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
