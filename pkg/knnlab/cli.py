import argparse
import sys
from typing import List, Optional

from knnlab import __version__
from knnlab.constant import (C1_KEY, C2_KEY, DATA_KEY, ESTIMATE_COMMAND, EXIT_VALIDATION_ERROR, GRID_KEY,
                             KERNEL_KEY, OUT_KEY, SEED_KEY, SUBCOMMAND_DEFAULTS, SUBCOMMANDS, TARGET_KEY,
                             THREADS_ENV_KEY)
from knnlab.entity.config_entity import RunConfig
from knnlab.pipeline.pipeline import dispatch
from knnlab.util.util import parse_scalar

# dedicated flags and the configuration key each one overrides
ESTIMATE_FLAGS = {
    "--data": DATA_KEY,
    "--grid": GRID_KEY,
    "--out": OUT_KEY,
    "--kernel": KERNEL_KEY,
    "--target": TARGET_KEY,
    "--c1": C1_KEY,
    "--c2": C2_KEY,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knn-lab",
                                     description="k-NN kernel estimators and their rate laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for subcommand in SUBCOMMANDS:
        subparser = subparsers.add_parser(subcommand)
        subparser.add_argument("--config", dest="config_path", default=None,
                               help="run file, YAML (.yaml/.yml) or key=value lines")
        subparser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                               help="override one configuration key; repeatable")
        subparser.add_argument("--out-dir", dest="out_dir", default=None)
        subparser.add_argument("--threads", type=int, default=None,
                               help=f"worker threads (default: ${THREADS_ENV_KEY}, else all cores)")
        if subcommand == ESTIMATE_COMMAND:
            for flag, key in ESTIMATE_FLAGS.items():
                subparser.add_argument(flag, dest=f"flag_{key}", default=None)
        elif SEED_KEY in SUBCOMMAND_DEFAULTS[subcommand]:
            subparser.add_argument("--seed", dest=f"flag_{SEED_KEY}", default=None)
    return parser


def parse_overrides(pairs: List[str]) -> dict:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--set expects KEY=VALUE, got [{pair}]")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = parse_scalar(value)
    return overrides


def make_run_config(args: argparse.Namespace) -> RunConfig:
    """Flags win over --set, which wins over the run file."""
    overrides = parse_overrides(args.overrides)
    for name, value in vars(args).items():
        if name.startswith("flag_") and value is not None:
            overrides[name[len("flag_"):]] = parse_scalar(value)
    return RunConfig(subcommand=args.subcommand, config_path=args.config_path, overrides=overrides,
                     out_dir=args.out_dir, threads=args.threads)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run_config = make_run_config(args)
    except ValueError as e:
        print(f"knn-lab: invalid configuration: {e}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    return dispatch(run_config)


if __name__ == "__main__":
    sys.exit(main())
