"""``flowsolve`` command line: ``sweep``, ``converge`` and ``plot``.

Exit codes: 0 success, 2 configuration error, 3 some cells failed.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .experiments import ConfigError, load_config, plot_csv, run_convergence, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3


def _nfe_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--nfe expects comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("--nfe needs positive integers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowsolve", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    for name, help_ in (("sweep", "solver x NFE sweep"), ("converge", "empirical convergence orders")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="experiment JSON file")
        sp.add_argument("--out", help="output directory (overrides config 'out')")
        sp.add_argument("--seed", type=int, help="override config seed")
        sp.add_argument("--nfe", type=_nfe_list, help="override NFE list, e.g. 7,8,9,10")
        sp.add_argument("--timing", action="store_true", help="fill the elapsed_ms column")

    pp = sub.add_parser("plot", help="render a result CSV as SVG")
    pp.add_argument("--csv", required=True)
    pp.add_argument("--out", required=True, help="SVG path")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    try:
        if args.command == "plot":
            path = plot_csv(args.csv, args.out)
            print(f"wrote {path}")
            return EXIT_OK

        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            overrides["seed"] = args.seed
        if args.nfe is not None:
            overrides["nfe"] = args.nfe
        if args.out is not None:
            overrides["out"] = args.out
        if args.timing:
            overrides["timing"] = True
        cfg = replace(cfg, **overrides)

        if args.command == "sweep":
            res = run_sweep(cfg)
            n_failed = sum(1 for c in res.cells if c.error)
            print(f"wrote {res.csv_path} ({len(res.rows)} rows, {n_failed} failed cells)")
            for c in res.cells:
                if c.error:
                    print(f"failed: {c.spec.label} nfe={c.nfe}: {c.error}", file=sys.stderr)
            return EXIT_PARTIAL if res.failed else EXIT_OK

        report = run_convergence(cfg)
        for spec, r in report.results.items():
            print(f"{spec.label:28s} slope={r.slope:6.3f}  r2={r.r_squared:.4f}")
        for spec, msg in report.failures.items():
            print(f"failed: {spec.label}: {msg}", file=sys.stderr)
        print(f"wrote {report.csv_path}" + (f" and {report.svg_path}" if report.svg_path else ""))
        return EXIT_PARTIAL if report.failed else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
