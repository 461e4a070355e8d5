#!/usr/bin/env python3

"""Command-line front end: mine, fuzz, reduce and report."""

import argparse
import logging
import os
import sys

from .config import load_config
from .errors import HdlMutantError
from .fragments import DEFAULT_MAX_LEN, SAMPLING_STRATEGIES, build_model, ingest_corpus, save_model
from .harness import load_bug, reduce_case, run_campaign, save_reduced
from .reducer import ReductionTimeout
from .report import write_report

EXIT_OK = 0
EXIT_BUGS = 1
EXIT_USAGE = 2


def corpus_files(corpus_dir):
    """Every ``.v`` file below ``corpus_dir``, sorted."""
    paths = []
    for root, _, files in os.walk(corpus_dir):
        paths.extend(os.path.join(root, name) for name in files if name.endswith(".v"))
    return sorted(paths)


def mine(args):
    if not os.path.isdir(args.corpus_dir):
        raise HdlMutantError(f"{args.corpus_dir} is not a directory")
    stats = ingest_corpus(corpus_files(args.corpus_dir))
    model = build_model(stats, max_len_L=args.max_len, strategy=args.sampling)
    save_model(model, args.output)
    logging.info("Wrote model with %d elements to %s", len(model.freq), args.output)
    return EXIT_OK


def fuzz(args):
    overrides = {"rng_seed": args.seed, "workers": args.workers,
                 "timeout_secs": args.timeout_secs,
                 "variants_per_seed": args.variants_per_seed, "output_dir": args.out}
    config = load_config(args.config, overrides)
    records = run_campaign(config)
    print(f"{len(records)} bug(s) recorded in {os.path.join(config.output_dir, 'bugs')}")
    return EXIT_BUGS if records else EXIT_OK


def reduce(args):
    record, tool = load_bug(args.bug_dir)
    try:
        reduced = reduce_case(record, tool, args.budget_secs)
    except ReductionTimeout as err:
        reduced = err.best
    path = save_reduced(record, reduced)
    print(f"Reduced case written to {path}")
    return EXIT_OK


def report(args):
    write_report(args.dir, args.output)
    return EXIT_OK


def parse_arguments(argv):
    """Parse the given argument vector.

    .. Keyword Arguments:
    :param argv: The arguments to be parsed.

    .. Returns:
    :returns: The parsed arguments.
    :rtype: A argparse namespace object.

    """
    fmtr = argparse.RawDescriptionHelpFormatter
    kdesc = "Equivalent-mutation fuzzing of HDL synthesis tools."
    parser = argparse.ArgumentParser(prog="hdlmutant", description=kdesc, formatter_class=fmtr)
    parser.add_argument("-v", "--verbosity", metavar="N", type=int,
                        default=logging.WARNING,
                        choices=range(logging.NOTSET, logging.CRITICAL),
                        help="Set logging verbosity level.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="Build a fragment model from a Verilog corpus.")
    p.add_argument("corpus_dir", help="Directory searched recursively for .v files.")
    p.add_argument("-o", "--output", required=True, help="Model JSON file to write.")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN,
                   help="Longest fragment in syntax elements.")
    p.add_argument("--sampling", default="bayesian", choices=SAMPLING_STRATEGIES,
                   help="Sampling strategy stored in the model.")
    p.set_defaults(func=mine)

    p = sub.add_parser("fuzz", help="Run a fuzzing campaign.")
    p.add_argument("-c", "--config", required=True, help="Campaign configuration JSON.")
    p.add_argument("--seed", type=int, help="Override rng_seed.")
    p.add_argument("--workers", type=int, help="Override the number of workers.")
    p.add_argument("--timeout-secs", type=float, help="Override every tool's timeout.")
    p.add_argument("--variants-per-seed", type=int, help="Override variants_per_seed.")
    p.add_argument("--out", help="Override output_dir.")
    p.set_defaults(func=fuzz)

    p = sub.add_parser("reduce", help="Reduce a recorded bug.")
    p.add_argument("bug_dir", help="A bugs/<id> directory.")
    p.add_argument("--budget-secs", type=float, default=120,
                   help="Wall-clock budget for the reduction.")
    p.set_defaults(func=reduce)

    p = sub.add_parser("report", help="Render a Markdown campaign report.")
    p.add_argument("-d", "--dir", default=os.getcwd(), help="Campaign output directory.")
    p.add_argument("-o", "--output", required=True, help="Markdown file to write.")
    p.set_defaults(func=report)
    return parser.parse_args(argv)


def cli_dispatch(argv):
    """Run one subcommand and map the outcome to an exit code."""
    try:
        args = parse_arguments(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=args.verbosity)
    try:
        return args.func(args)
    except (HdlMutantError, OSError) as err:
        print(f"hdlmutant {args.command}: {err}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_OK


def run():
    """Run the application."""
    return cli_dispatch(sys.argv[1:])


if __name__ == '__main__':
    sys.exit(run())
