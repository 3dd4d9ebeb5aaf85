"""Command-line interface: poly, zeros, density, compare and report."""
import argparse
import logging
import sys
from typing import Dict, List, Optional

from pydantic import ValidationError

from . import __version__
from .config import settings
from .errors import MultiOpError
from .experiments import ExperimentConfig, cmd_compare, cmd_density, cmd_poly, cmd_report, cmd_zeros, load_config, write_text

logger = logging.getLogger("multiop")

COMMANDS = {
    "poly": cmd_poly,
    "zeros": cmd_zeros,
    "density": cmd_density,
    "compare": cmd_compare,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multiop",
        description="Multiple orthogonal polynomials, certified zeros and limit zero densities",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=["jp", "ml", "meijer"], help="polynomial family")
    common.add_argument("--r", type=int, help="number of weights")
    common.add_argument("--alpha", help="comma list of fractions, e.g. 0,1/2")
    common.add_argument("--beta", help="fraction, Jacobi-Piñeiro only")
    common.add_argument("--nu", help="comma list of nonnegative integers, Meijer-G only")
    common.add_argument("--n", nargs="+", help="diagonal sizes or multi-indices like 2:3")
    common.add_argument("--kind", choices=["v", "w", "u", "g", "xg"], help="density kind")
    common.add_argument("--out", help="output file (output directory for report)")
    common.add_argument("--bits", type=int, help="working precision in bits")
    common.add_argument("--grid", type=int, help="number of phi intervals in density tables")
    common.add_argument("--tol", type=float, help="relative refinement tolerance for zeros")
    common.add_argument("--points", help="comma list of ratio test points, e.g. -1,1/2+i")
    common.add_argument("--workers", type=int, help="worker processes for compare")
    common.add_argument("--timeout", type=int, help="seconds per compared index, 0 for none")
    common.add_argument("--timing", action="store_true", default=None, help="record wall times")
    common.add_argument("--config", help="key = value file; its entries override flags")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    subparsers.add_parser("poly", parents=[common], help="exact coefficients, ascending powers")
    subparsers.add_parser("zeros", parents=[common], help="certified zeros as CSV")
    subparsers.add_parser("density", parents=[common], help="limit density table as CSV")
    subparsers.add_parser("compare", parents=[common], help="convergence report as JSON")
    subparsers.add_parser("report", parents=[common], help="figure data for r = 1..5 and a summary")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    flags: Dict = {}
    for key in ("family", "r", "alpha", "beta", "nu", "n", "kind", "out", "bits", "grid", "tol",
                "points", "workers", "timeout", "timing"):
        value = getattr(args, key)
        if value is not None:
            flags[key] = value
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            return load_config(handle.read(), flags)
    return ExperimentConfig(**flags)


async def _print_feedback(event: dict):
    logger.info(event["message"])


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        settings.log_level = args.log_level.upper()
    settings.configure_logging()

    try:
        config = config_from_args(args)
        command = COMMANDS[args.command]
        if args.command in ("compare", "report"):
            text = command(config, feedback_callback=_print_feedback)
        else:
            text = command(config)
        if args.command != "report" and config.out:
            write_text(config.out, text)
            logger.info(f"[CLI] wrote {config.out}")
        else:
            sys.stdout.write(text)
        return 0
    except ValidationError as exc:
        print(f"❌ invalid configuration: {exc}", file=sys.stderr)
        return 2
    except MultiOpError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
