"""Command-line experiment runner.

Subcommands: ``run <config>``, ``validate <config>``, ``list-functionals``,
``list-specs``.  The output directory is resolved as --out flag, then the
LENTPARTICLE_OUT environment variable, then the config's ``out`` field.

Exit codes: 0 success, 2 config parse/validation error, 3 spec violation,
4 numeric error, 5 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import DEFAULTS, parse_config
from .errors import (
    ConfigurationError,
    DomainError,
    HypothesisViolationError,
    LentParticleError,
    NumericError,
    ParseError,
    SamplerError,
    SingularJumpError,
    SpecViolationError,
    StiffnessError,
)
from .runner import check_runnable, resolved_names, run_experiment

EXIT_PARSE = 2
EXIT_SPEC = 3
EXIT_NUMERIC = 4
EXIT_IO = 5

_RUN_HELP = f"""Config file format: [section] headers with 'key = value' lines.
Sections: [experiment] (kind, horizon, paths, seed, fd_step, rel_tol, out,
figures, workers), [spec] (family + parameters), [functional] or [model]
(name + parameters).  '#' starts a comment line; unknown keys are errors;
'seed' is required.

Defaults: horizon={DEFAULTS['horizon']}, paths={DEFAULTS['paths']},
fd_step={DEFAULTS['fd_step']}, rel_tol={DEFAULTS['rel_tol']},
out={DEFAULTS['out']!r}, figures={str(DEFAULTS['figures']).lower()},
workers={DEFAULTS['workers']}.

Environment: LENTPARTICLE_OUT overrides the output directory (the --out
flag wins over both)."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lentparticle",
        description="Carre du champ matrices of Poisson functionals and jump SDEs, "
        "with density-existence diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run",
        help="run an experiment config",
        description=_RUN_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    run.add_argument("config", help="path to the experiment config file")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--paths", type=int, default=None, help="override the path count")
    run.add_argument("--out", default=None, help="override the output directory")
    run.add_argument("--fd-step", type=float, default=None, help="override the finite-difference step")
    run.add_argument("--workers", type=int, default=None, help="thread count for path-parallel runs")
    run.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    run.add_argument(
        "--print-config",
        action="store_true",
        help="print the effective config (defaults and overrides applied) and exit",
    )

    val = sub.add_parser("validate", help="parse a config and check every referenced name")
    val.add_argument("config", help="path to the experiment config file")

    sub.add_parser("list-functionals", help="list catalog functionals")
    sub.add_parser("list-specs", help="list built-in jump-measure families and models")
    return parser


def _load_config(path: str):
    with open(path, "r") as fh:
        return parse_config(fh.read())


def _apply_overrides(cfg, args):
    out = args.out or os.environ.get("LENTPARTICLE_OUT") or None
    cfg = cfg.override(
        seed=args.seed,
        paths=args.paths,
        out=out,
        fd_step=getattr(args, "fd_step", None),
        workers=args.workers,
    )
    if args.no_figures:
        cfg = cfg.override(figures=False)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _apply_overrides(_load_config(args.config), args)
            if args.print_config:
                sys.stdout.write(cfg.canonical_text())
                return 0
            run_experiment(cfg)
            return 0
        if args.command == "validate":
            cfg = _load_config(args.config)
            check_runnable(cfg)
            print(f"config OK: kind={cfg.kind}, seed={cfg.seed}, paths={cfg.paths}")
            return 0
        names = resolved_names()
        if args.command == "list-functionals":
            for name in names["functionals"]:
                print(name)
            return 0
        if args.command == "list-specs":
            print("jump-measure families:")
            for name in names["specs"]:
                print(f"  {name}")
            print("models:")
            for name in names["models"]:
                print(f"  {name}")
            return 0
        raise AssertionError("unreachable")
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigurationError, SamplerError, SpecViolationError, HypothesisViolationError) as exc:
        print(f"spec violation: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (NumericError, StiffnessError, SingularJumpError, DomainError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LentParticleError as exc:  # safety net for future error classes
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
