"""Command line front end: ``haarlab <subcommand> [--flag value ...]``.

Exit status is 0 when every assertion of the run held, 1 when one failed and
2 for usage errors (bad flags, unparsable specs, invalid configs).
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from . import __version__
from .harness import ExperimentConfig, load_config_file, run_experiment
from .suites import SUITES

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_SUBCOMMANDS = {
    "tail": "tail",
    "lemma": "lemma",
    "single-ring": "single-ring",
    "sr-check": "sr-conditions",
    "counterexample": "counterexample",
    "verify-all": "lemma",
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors already; keep that but without abbreviations."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)


def _common(p: argparse.ArgumentParser) -> None:
    # defaults stay None so that a --config file is only overridden by flags actually given
    p.add_argument("--config", help="key=value file; flags given on the command line override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", dest="out_path", help="output path; the extension is replaced per file")


def _matrix(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--d", dest="d_spec", help="zero | ident | neg-ident | scalar:a+bi | diag:v1,... | uniform:lo:hi")
    p.add_argument("--ensemble", help="unitary | orthogonal | special_orthogonal")
    p.add_argument("--trials", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="haarlab", description="Invertibility of randomly perturbed matrices, numerically.")
    parser.add_argument("--version", action="version", version=f"haarlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("tail", help="empirical P(s_min(D + U) <= t) over a t grid")
    _matrix(p)
    p.add_argument("--t-grid", dest="t_grid", help="log:lo:hi:points or list:v1,...")
    _common(p)

    p = sub.add_parser("lemma", help="run one lemma verification suite")
    p.add_argument("--lemma", help="one of: " + ", ".join(SUITES) + " (or all)")
    p.add_argument("--instances", type=int, help="suite size; 0 selects the default")
    _common(p)

    p = sub.add_parser("single-ring", help="eigenvalue clouds of U D V and annulus coverage")
    _matrix(p)
    p.add_argument("--margin", type=float)
    _common(p)

    p = sub.add_parser("sr-check", help="Single Ring conditions SR1, SR2 and an SR3 estimate")
    _matrix(p)
    p.add_argument("--M", dest="M", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--kappa1", type=float)
    p.add_argument("--z-grid", dest="z_grid", help="re_lo:re_hi:points at height n^-kappa")
    p.add_argument("--z", help="comma-separated points for the SR3 estimate")
    p.add_argument("--delta-exp", dest="delta_exp", type=float)
    p.add_argument("--symmetrized", action="store_const", const=True, default=None)
    _common(p)

    p = sub.add_parser("counterexample", help="det and s_min of M[[1,i],[i,-1]] + U for Haar U in O(2) or SO(2)")
    p.add_argument("--M", dest="M", type=float)
    p.add_argument("--ensemble", help="orthogonal | special_orthogonal")
    p.add_argument("--trials", type=int)
    _common(p)

    p = sub.add_parser("verify-all", help="every lemma suite at its default size")
    p.add_argument("--instances", type=int, help="override every suite size")
    _common(p)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    values["experiment"] = _SUBCOMMANDS[args.command]
    if args.command == "verify-all":
        values["lemma"] = "all"
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        values[key] = val
    if args.command == "counterexample":
        values.setdefault("ensemble", "orthogonal")
    return ExperimentConfig.from_mapping(values)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"haarlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = run_experiment(config)
    except ValueError as exc:  # DSpecError, HypothesisError and bad option combinations
        print(f"haarlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for line in manifest.summary:
        print(line)
    for path in manifest.outputs:
        print(f"wrote {path}")
    print(f"config_hash={manifest.config_hash} wall_time={manifest.wall_time:.3f}s")
    return EXIT_OK if manifest.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
