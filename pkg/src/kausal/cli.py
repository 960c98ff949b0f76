"""Command line: ``kausal <experiment> --config FILE [--out DIR] [--threads N] [--seed S]``.

Exit status is 0 when every check passed, 2 when a check failed and 1 on
errors.  ``KAUSAL_THREADS`` overrides ``--threads``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import GoldenMismatch, InvalidConfig, KausalError

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

log = logging.getLogger("kausal")


def _threads(arg) -> int:
    env = os.environ.get("KAUSAL_THREADS")
    raw = env if env not in (None, "") else arg
    try:
        n = int(raw)
    except (TypeError, ValueError):
        raise InvalidConfig(f"thread count must be an integer, got {raw!r}") from None
    if n < 1:
        raise InvalidConfig("thread count must be >= 1")
    return n


def _parser() -> argparse.ArgumentParser:
    from .experiments import EXPERIMENTS

    ap = argparse.ArgumentParser(prog="kausal", description="Run a configured experiment.")
    ap.add_argument("experiment", help=f"one of: {', '.join(sorted(EXPERIMENTS))}, verify-golden, list")
    ap.add_argument("target", nargs="?", help="report directory (verify-golden only)")
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", help="output directory (default: config [output] dir, else runs/<experiment>)")
    ap.add_argument("--threads", default=1, help="worker threads (KAUSAL_THREADS takes precedence)")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("--golden", help="golden directory (verify-golden only)")
    ap.add_argument("-q", "--quiet", action="store_true", help="only print the summary line")
    return ap


def _list() -> int:
    from .experiments import EXPERIMENTS

    for name in sorted(EXPERIMENTS):
        exp = EXPERIMENTS[name]
        keys = ", ".join(f"{k}={v[1]!r}" for k, v in sorted(exp.schema.items()))
        print(f"{name:15s} {exp.summary}\n{'':15s} params: {keys}")
    return EXIT_PASS


def _verify(args) -> int:
    from .experiments import verify_golden

    if not args.target or not args.golden:
        raise InvalidConfig("verify-golden needs a report directory and --golden DIR")
    try:
        verify_golden(args.target, args.golden)
    except GoldenMismatch as exc:
        if getattr(exc, "missing", False):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR
        print(f"golden mismatch: {exc}")
        if exc.diff:
            print(exc.diff)
        return EXIT_FAIL
    print("golden: pass")
    return EXIT_PASS


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        if args.experiment == "list":
            return _list()
        if args.experiment == "verify-golden":
            return _verify(args)
        from .config import load_config, parse_config
        from .experiments import get_experiment, run

        get_experiment(args.experiment)
        if args.config:
            cfg = load_config(args.config)
            if cfg.experiment != args.experiment:
                raise InvalidConfig(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
        else:
            cfg = parse_config(f"experiment = {args.experiment}\n")
        if args.seed is not None:
            if args.seed < 0:
                raise InvalidConfig("seed must be non-negative")
            cfg = replace(cfg, seed=args.seed)
        threads = _threads(args.threads)
        out = Path(args.out) if args.out else (cfg.resolve_path(cfg.out_dir) if cfg.out_dir
                                               else Path("runs") / cfg.experiment)
        log.info("running %s (config %s, %d thread%s)", cfg.experiment, cfg.config_hash()[:12], threads,
                 "" if threads == 1 else "s")
        report = run(cfg, threads)
        report.timings["threads"] = threads
        report.write(out)
        for chk in report.checks:
            state = {True: "pass", False: "FAIL", None: "info"}[chk["passed"]]
            log.info("  %-4s %s value=%s bound=%s", state, chk["name"], chk.get("value"), chk.get("bound"))
        print(f"{cfg.experiment}: {'pass' if report.passed else 'FAIL'} -> {out}")
        return EXIT_PASS if report.passed else EXIT_FAIL
    except (KausalError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
