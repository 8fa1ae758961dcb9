"""vvlab command line: run sweeps, audit single lemmas, refit rates."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness


def _cmd_run(args) -> int:
    config = harness.load_config(args.config)
    if args.output_dir:
        config = harness.replace(config, output_dir=args.output_dir)
    sweep = harness.run_sweep(config)
    fit = harness.fit_rate(sweep)
    harness.emit_report(sweep, fit, config.output_dir)
    checks = harness.acceptance_checks(sweep, fit, config)
    for rec in sweep.records:
        status = "failed" if rec.failed else f"{rec.error_sup:.6e}"
        print(f"n={rec.n:<3d} nu={rec.nu:.6e}  error={status}")
    print(f"slope={fit.slope:.6f} intercept={fit.intercept:.6f} rms={fit.residual_rms:.3e}")
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return 0 if all(checks.values()) else 1


def _cmd_audit(args) -> int:
    config = harness.load_config(args.config)
    audits, extra = harness.run_audit(config, args.lemma)
    payload = {"audits": [a.to_dict() for a in audits]}
    if extra:
        payload["terms"] = extra
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if all(a.passed for a in audits) else 1


def _cmd_fit(args) -> int:
    records = harness.read_sweep_csv(args.input)
    sweep = harness.SweepResult(records, T=float("nan"), alpha=float("nan"),
                                omega0_sup=float("nan"), v0_sup=float("nan"))
    fit = harness.fit_rate(sweep)
    print(json.dumps({"slope": fit.slope, "intercept": fit.intercept,
                      "residual_rms": fit.residual_rms, "n_range": list(fit.n_range)}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vvlab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="viscosity sweep against the Euler reference")
    run.add_argument("--config", required=True)
    run.add_argument("--output-dir", default=None, help="override output_dir from the config")
    run.set_defaults(func=_cmd_run)

    audit = sub.add_parser("audit", help="audit a single lemma on the configured data")
    audit.add_argument("--config", required=True)
    audit.add_argument("--lemma", required=True, choices=harness.LEMMAS)
    audit.set_defaults(func=_cmd_audit)

    fit = sub.add_parser("fit", help="refit the convergence rate from a sweep.csv")
    fit.add_argument("--input", required=True)
    fit.set_defaults(func=_cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
