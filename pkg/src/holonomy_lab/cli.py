"""Command-line entry point.

    holonomy-lab <command> --config <path> --out <dir> [--seed S]

Exit codes: 0 all gates pass, 1 gate failure, 2 config or runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigInvalid, HolonomyLabError
from .runner import COMMANDS, emit_report, run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="holonomy-lab",
        description="Experiments on circle-diffeomorphism cocycles over a "
                    "hyperbolic toral automorphism.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        manifest = run_experiment(cfg, args.command, args.out,
                                  seed_override=args.seed)
    except ConfigInvalid as exc:
        print(f"config error [{exc.field}]: {exc.message}", file=sys.stderr)
        return 2
    except HolonomyLabError as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(emit_report(manifest))
    return 0 if manifest.all_gates_pass() else 1


if __name__ == "__main__":
    sys.exit(main())
