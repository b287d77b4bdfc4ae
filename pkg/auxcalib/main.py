"""
Entry point of the auxcalib command line: synth, fit, eval, transfer and
compare.
"""
import argparse
import logging
import os
import sys
import traceback

from auxcalib import APP_NAME, __version__
from auxcalib.default_scheme_config import EVAL_SPLITS, KINDS
from auxcalib.errors import CalibrationError
from auxcalib.load_config import LoadConfig
from auxcalib.processing import COMMANDS
from auxcalib.run_config import RunConfig
from auxcalib.utils import str2bool

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Flag destination -> config key.
FLAG_KEYS = {
    "seed": "seed",
    "out": "out",
    "bins": "bins",
    "kind": "kind",
    "dataset": "dataset",
    "model": "model",
    "format": "format",
    "split": "evalSplit",
    "epochs": "epochs",
    "verbose": "verbose",
}


def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument('-c',
                        '--config',
                        type=str,
                        default=None,
                        help='JSON config file, or a manifest.json to replay.')
    shared.add_argument('-s',
                        '--seed',
                        type=int,
                        default=None,
                        help='Master seed of every random component.')
    shared.add_argument('-o',
                        '--out',
                        type=str,
                        default=None,
                        help='Output directory (default: out).')
    shared.add_argument('-b',
                        '--bins',
                        type=int,
                        default=None,
                        help='Number of equal-width metric bins (default: 20).')
    shared.add_argument('-k',
                        '--kind',
                        choices=KINDS,
                        default=None,
                        help='Calibrator kind to fit.')
    shared.add_argument('-d',
                        '--dataset',
                        type=str,
                        default=None,
                        help='Dataset file (CSV or JSONL).')
    shared.add_argument('-m',
                        '--model',
                        type=str,
                        default=None,
                        help='Model file to evaluate or transfer; a CCAC-S model '
                        'adds a transferred row to compare.')
    shared.add_argument('-f',
                        '--format',
                        choices=["csv", "jsonl"],
                        default=None,
                        help='Dataset format (default: from the extension).')
    shared.add_argument('--split',
                        choices=EVAL_SPLITS,
                        default=None,
                        help='Partition of the dataset to evaluate.')
    shared.add_argument('-e',
                        '--epochs',
                        type=int,
                        default=None,
                        help='Training epochs of the network calibrators.')
    shared.add_argument('-v',
                        '--verbose',
                        type=str2bool,
                        nargs='?',
                        const=True,
                        default=None,
                        help='Enable verbose mode.')

    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description=
        "Post-hoc confidence calibration of classifier logits with an "
        "auxiliary misclassified class.")
    parser.add_argument('--version',
                        action='version',
                        version=f"{APP_NAME} {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("synth",
                          parents=[shared],
                          help="Generate a synthetic logit dataset.")
    subparsers.add_parser("fit",
                          parents=[shared],
                          help="Fit a calibrator on a dataset.")
    subparsers.add_parser("eval",
                          parents=[shared],
                          help="Evaluate a model on a dataset.")
    subparsers.add_parser(
        "transfer",
        parents=[shared],
        help="Transfer a CCAC-S model with a few labeled samples.")
    subparsers.add_parser(
        "compare",
        parents=[shared],
        help="Fit and evaluate every calibrator kind on one dataset.")
    return parser


def resolve_config(args):
    """
    Loads the configuration files and applies the command-line flags on top.

    Returns:
        RunConfig: The checked run configuration.
    """
    config = LoadConfig(args.config)
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest)
        if value is not None:
            config.set_config_value(key, value)
    run_cfg = RunConfig.from_load_config(config).check(args.command)
    return run_cfg


def configure_logging(verbose):
    logging.basicConfig(format=LOG_FORMAT)
    logging.getLogger().setLevel(logging.INFO if verbose else logging.WARNING)


def _write_error_log(out_dir, error_message):
    for directory in (out_dir, os.getcwd()):
        if not directory:
            continue
        try:
            os.makedirs(directory, exist_ok=True)
            path = os.path.join(directory, "error.log")
            with open(path, "w", encoding="utf-8") as error_file:
                error_file.write(error_message)
            return path
        except OSError:
            continue
    return None


def main(argv=None):
    """
    Runs one command.

    Returns:
        int: 0 when every output was written and re-read, 1 otherwise.
    """
    args = build_parser().parse_args(argv)
    configure_logging(bool(args.verbose))
    out_dir = args.out
    try:
        run_cfg = resolve_config(args)
        out_dir = run_cfg.out
        configure_logging(run_cfg.verbose)
        outputs = COMMANDS[args.command](run_cfg)
        logger.info("%s complete: %d files written to %s.", args.command,
                    len(outputs), run_cfg.out)
        return 0
    except CalibrationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        error_message = (f"An unexpected error occurred:\n{str(e)}\n"
                         f"{traceback.format_exc()}")
        logger.error(error_message)
        _write_error_log(out_dir, error_message)
        return 1


if __name__ == "__main__":
    sys.exit(main())
