"""``thermoforge <regress|pinn|classify|plots|all> --config PATH``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 training
divergence.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, DataError, InvalidParameterError, TrainingDivergenceError
from .suites import RUNNERS, run_plots, write_outputs

COMMANDS = ("regress", "pinn", "classify", "plots", "all")

log = logging.getLogger("thermoforge")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermoforge", description="Run the regression, physics-informed and "
                                "classification experiment suites.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", help="global seed (overrides the config and THERMOFORGE_SEED)")
    p.add_argument("--parallel", action="store_true", help="fit independent models concurrently")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(command, cfg, parallel=False) -> dict:
    """Compute every output file for ``command``; returns name -> text."""
    if command == "plots":
        return run_plots(cfg)
    suites = cfg.suites if command == "all" else (command,)
    files = {}
    for suite in suites:
        log.info("running %s suite", suite)
        files.update(RUNNERS[suite](cfg, parallel).files)
    if command == "all":
        files.update(run_plots(cfg))
    return files


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(seed=args.seed, output=args.out)
        files = run(args.command, cfg, args.parallel)
        manifest = write_outputs(cfg.output_dir, files)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(files)} files; manifest at {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
