import argparse
import logging
import sys
from typing import Optional, Sequence

from .commands import convergence, equilibria, run, stability
from .config import settings
from .exceptions import EpidemicFVError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epidemic-fv", description=settings.PROJECT_NAME)
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="logging level (default from environment)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    run.register(subparsers)
    equilibria.register(subparsers)
    stability.register(subparsers)
    convergence.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=args.log_level.upper(),
        format='%(asctime)s %(levelname)s %(name)s %(message)s',
    )

    try:
        return args.handler(args)
    except EpidemicFVError as e:
        logger.error(f"❌ {e.detail}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
