import argparse
import os
import sys

import src.Log
from src.Config import load_config
from src.Errors import ConfigError, SuiteFailure, VandermondeError
from src.Experiment import Experiment
from src.Validation import SUITE_NAMES, run_verify
from src.Writer import FORMATS

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SUITE = 2
EXIT_IO = 3


def build_parser():
    parser = argparse.ArgumentParser(description="Clustered Vandermonde experiments and verification suites.")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, text in (("angles", "principal angles between cluster subspaces"),
                       ("spectrum", "singular value scalings of clustered Vandermonde matrices"),
                       ("leastsq", "componentwise least-squares perturbation experiment"),
                       ("verify", "randomised checks of the explicit-constant inequalities")):
        command = commands.add_parser(name, help=text)
        command.add_argument('--config', type=str, default=None, help='Experiment configuration (default config.yaml)')
        command.add_argument('--seed', type=int, default=None, help='Unsigned 64-bit seed, overrides the config')
        command.add_argument('--out', type=str, default="results", help='Output directory')
        if name != "verify":
            command.add_argument('--format', type=str, default="csv", choices=FORMATS, help='Output format')
            command.add_argument('--jobs', type=int, default=1, help='Parallel workers, -1 for all cores')
        else:
            command.add_argument('--suite', action="append", choices=SUITE_NAMES, default=None,
                                 help='Suite to run, repeatable (default: all suites)')
    return parser


def run_experiment(args):
    config = load_config(args.config or "config.yaml")
    if config.experiment != args.command:
        raise ConfigError(f"configuration describes a '{config.experiment}' experiment, "
                          f"not '{args.command}'", field="experiment", line=config.lines.get("experiment"))
    if args.seed is not None:
        config = config.with_seed(args.seed)

    logger = src.Log.Logger(os.path.join(config.log_path, "app.log"))
    experiment = Experiment(config, jobs=args.jobs, logger=logger)
    records = experiment.run()
    paths = experiment.save(records, args.out, args.format)
    src.Log.print_with_color(f"[<<<] {len(records)} records written to {', '.join(paths)}", "green")


def run_verification(args):
    log_path = "."
    if args.config is not None:
        log_path = load_config(args.config).log_path
    logger = src.Log.Logger(os.path.join(log_path, "app.log"))
    seed = 0 if args.seed is None else args.seed
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}", field="seed")

    report = run_verify(args.suite, seed=seed, out_dir=args.out, logger=logger)
    if not report.passed:
        raise SuiteFailure(report.failed)
    src.Log.print_with_color("All verification suites passed", "green")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            run_verification(args)
        else:
            run_experiment(args)
    except ConfigError as e:
        src.Log.print_with_color(f"Configuration error: {e}", "red")
        return EXIT_CONFIG
    except SuiteFailure as e:
        src.Log.print_with_color(str(e), "red")
        return EXIT_SUITE
    except OSError as e:
        src.Log.print_with_color(f"I/O error: {e}", "red")
        return EXIT_IO
    except VandermondeError as e:
        # parameters that pass validation but cannot be realised, e.g. overlapping clusters
        src.Log.print_with_color(f"Invalid experiment parameters: {e}", "red")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
