"""Experiment runner CLI.

Exit codes: 0 on success, 1 when an experiment check fails (the table is
still written first) or a resource cap aborts the run, 2 on configuration
errors. The sampling cap can be overridden with the GTMKIT_MAX_LAMBDA
environment variable.
"""

from __future__ import annotations

import argparse
import sys
import time

from .config import parse_config
from .errors import ConfigError, ExperimentCheckError, ResourceCapError
from .experiments import execute
from .table import emit

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtmkit",
        description="Run a gtmkit experiment from a key=value config file.",
    )
    parser.add_argument("--config", required=True, help="path to the config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--trials", type=int, default=None, help="override the trial count")
    parser.add_argument("--out", default=None, help="output path (default: <experiment>.<format>)")
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default from config: csv)")
    parser.add_argument("--plot", action="store_true",
                        help="also render the experiment figure next to the output file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = parse_config(fh.read())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.seed is not None:
        config.seed = args.seed
    if args.trials is not None:
        if args.trials < 1:
            print("error: --trials must be positive", file=sys.stderr)
            return 2
        if "trials" in config.params:
            config.params["trials"] = args.trials
    if args.out is not None:
        config.out = args.out
    if args.format is not None:
        config.fmt = args.format

    out_path = config.out or f"{config.experiment}.{config.fmt}"
    started = time.monotonic()
    try:
        table, checks = execute(config)
    except ResourceCapError as exc:
        print(f"error: resource cap exceeded: {exc}", file=sys.stderr)
        return 1
    except ExperimentCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    emit(table, config.fmt, out_path)
    elapsed = time.monotonic() - started
    # Wall time goes to stderr only: the emitted bytes must be a pure
    # function of (config, seed).
    print(f"{config.experiment}: wrote {out_path} in {elapsed:.2f}s", file=sys.stderr)

    if args.plot:
        from .plots import render_figure

        fig_path = out_path.rsplit(".", 1)[0] + ".png"
        render_figure(table, config.experiment, fig_path)
        print(f"{config.experiment}: wrote {fig_path}", file=sys.stderr)

    failed = [c for c in checks if not c.passed]
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        detail = f" ({check.detail})" if check.detail else ""
        print(f"check {check.name}: {status}{detail}", file=sys.stderr)
    if failed:
        print(f"error: {len(failed)} check(s) failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
