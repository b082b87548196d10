"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 verification deviation, 3 resource guard.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import scenario
from .config import load_config
from .errors import FermiCloseError, ResourceGuardError
from .multiindex import MonomialKey

EXIT_OK, EXIT_INVALID, EXIT_DEVIATION, EXIT_GUARD = 0, 1, 2, 3


def _global_options(defaults: bool) -> argparse.ArgumentParser:
    # shared by the top-level parser and every subcommand so flags work in either position
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--config", default=d(None), help="scenario JSON file")
    p.add_argument("--out-dir", default=d("."), help="directory for CSV/JSON outputs")
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--tolerance", type=float, default=d(scenario.DEFAULT_TOLERANCE),
                   help="verification threshold")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fermiclose", parents=[_global_options(True)],
                                     description="Closed moment dynamics of fermionic CP maps.")
    sub = parser.add_subparsers(dest="command", required=True)
    shared = [_global_options(False)]

    sub.add_parser("run", parents=shared, help="run the configured dynamics, write a CSV")
    sub.add_parser("postselect", parents=shared, help="post-selected moments of a postselect scenario")
    sub.add_parser("transfer-matrix", parents=shared, help="dump the moment transfer matrix as CSV")

    v = sub.add_parser("verify", parents=shared, help="compare all formulas with the Fock-space oracle")
    v.add_argument("--corrupt", type=float, default=0.0,
                   help="add this offset to every entry of A on the formula side (fault injection)")
    v.add_argument("--random-unitaries", type=int, default=2)

    b = sub.add_parser("benchmark", parents=shared, help="time transfer-matrix assembly and expm")
    b.add_argument("--m-list", type=int, nargs="+", default=[10, 20, 40])
    b.add_argument("-k", type=int, default=2)
    b.add_argument("--repetitions", type=int, default=1)

    s = sub.add_parser("secondquant", parents=shared, help="contraction-semigroup checks")
    s.add_argument("--t1", type=float, default=0.3)
    s.add_argument("--t2", type=float, default=0.5)
    s.add_argument("--probe", default="1|1", help="monomial label, e.g. '1|1' or '1,2|2,3'")
    return parser


def _need_config(args):
    if not args.config:
        raise FermiCloseError("--config is required for this command")
    return load_config(args.config)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def dispatch(args) -> int:
    out_dir = Path(args.out_dir)
    if args.command == "benchmark":
        report = scenario.benchmark(args.m_list, args.k, args.repetitions, args.seed)
        _write_json(out_dir / "benchmark.json", report)
        for row in report["runs"]:
            print(f"m={row['m']:>3} D={row['D']:>6} assembly={row['assembly_seconds']:.3f}s "
                  f"expm={row['expm_seconds']:.3f}s")
        return EXIT_OK

    cfg = _need_config(args)
    if args.command == "run":
        paths = scenario.run_scenario(cfg, out_dir)
    elif args.command == "postselect":
        if cfg.dynamics["kind"] != "postselect":
            raise FermiCloseError("dynamics.kind: the postselect command needs a postselect scenario")
        paths = scenario.run_scenario(cfg, out_dir)
    elif args.command == "transfer-matrix":
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "transfer_matrix.csv"
        path.write_text(scenario.transfer_matrix_csv(cfg))
        paths = [path]
    elif args.command == "secondquant":
        report = scenario.secondquant_report(cfg, args.seed, args.t1, args.t2, MonomialKey.from_label(args.probe))
        paths = [out_dir / "secondquant.json"]
        _write_json(paths[0], report)
    else:
        report = scenario.verify(cfg, args.seed, args.tolerance, args.corrupt, args.random_unitaries)
        path = out_dir / "verify.json"
        _write_json(path, report)
        for name, value in report["max_deviation"].items():
            mark = "FLAG" if name in report["flagged"] else "ok"
            print(f"{name:<16} {value:.3e} {mark}")
        print(path)
        return EXIT_OK if report["passed"] else EXIT_DEVIATION
    for p in paths:
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args)
    except ResourceGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (FermiCloseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
