"""``attrib-forge`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config
from .dataset import DataError
from . import pipeline

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="attrib-forge",
                     description="GA feature selection and Shapley attribution for rating data.")
    parser.add_argument("command", choices=["ingest", "select", "explain", "compare", "report"])
    parser.add_argument("--config", required=True, help="INI-style run configuration")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--model", choices=["knn", "dt", "rf", "svr", "mlp"])
    parser.add_argument("--folds", type=int)
    parser.add_argument("--generations", type=int)
    parser.add_argument("--pop", type=int)
    parser.add_argument("--topk", type=int)
    parser.add_argument("--out", help="output directory (default: $ATTRIB_FORGE_OUT or ./out)")
    parser.add_argument("--jobs", type=int, help="parallel workers for fitness evaluation")
    parser.add_argument("--subset", type=int, default=1, help="subset to explain (1-based)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, model=args.model, folds=args.folds,
                          generations=args.generations, pop=args.pop, topk=args.topk,
                          out=args.out, n_jobs=args.jobs)
    except ConfigError as exc:
        print(f"attrib-forge: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "ingest":
            _, prep = pipeline.cmd_ingest(cfg)
            print(json.dumps(prep, indent=2))
        elif args.command == "select":
            result = pipeline.cmd_select(cfg)
            for k, ind in enumerate(result.top, start=1):
                print(f"{k}: mae={ind.mae:.4f} size={int(ind.mask.sum())}")
        elif args.command == "explain":
            res = pipeline.cmd_explain(cfg, args.subset)
            for name, score in res["ranking"]:
                print(f"{name}\t{score:.4f}")
        elif args.command == "compare":
            for row in pipeline.cmd_compare(cfg):
                print(f"{row['model']}\twrapper_mae={row['wrapper']['mae']:.4f}"
                      f"\tstandalone_mae={row['standalone']['mae']:.4f}")
        else:
            pipeline.cmd_report(cfg)
            print(f"report written to {cfg.out}/report.json")
    except IndexError as exc:
        print(f"attrib-forge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"attrib-forge: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).debug("failure", exc_info=True)
        print(f"attrib-forge: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
