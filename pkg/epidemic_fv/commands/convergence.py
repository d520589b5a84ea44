import argparse
import csv
import logging
from pathlib import Path
from typing import List, Optional

from ..schemas.reports import ConvergenceRow
from ..services.config_service import load_config
from ..services.convergence_service import convergence_study
from ..services.snapshot_service import fmt
from .run import output_directory

logger = logging.getLogger(__name__)

CONVERGENCE_FILE = "convergence.csv"
CONVERGENCE_HEADER = ["level", "h", "dt", "error", "order"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("convergence", help="refinement study on a manufactured solution")
    parser.add_argument("config", help="run configuration file")
    parser.add_argument("--levels", type=int, nargs="+", help="cells per side of each level (overrides the config)")
    parser.add_argument("--out-dir", help="output directory (overrides the config)")
    parser.add_argument(
        "--self-convergence",
        action="store_true",
        help="compare successive levels when no manufactured solution is configured",
    )
    parser.set_defaults(handler=cmd_convergence)


def write_convergence(path: Path, rows: List[ConvergenceRow]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CONVERGENCE_HEADER)
        for row in rows:
            order: Optional[str] = "" if row.order is None else fmt(row.order)
            writer.writerow([row.level, fmt(row.h), fmt(row.dt), fmt(row.error), order])
    return path


def cmd_convergence(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    rows = convergence_study(config, levels=args.levels, self_convergence=args.self_convergence)
    path = write_convergence(output_directory(config, args.config, args.out_dir) / CONVERGENCE_FILE, rows)

    print("\n" + "=" * 60)
    print("  CONVERGENCE")
    print("=" * 60)
    print(f"{'n':>6} {'h':>12} {'dt':>12} {'error':>14} {'order':>8}")
    for row in rows:
        order = "" if row.order is None else f"{row.order:.3f}"
        print(f"{row.level:>6} {row.h:12.6g} {row.dt:12.6g} {row.error:14.6e} {order:>8}")
    print(f"\n✅ Table written to {path}")
    print("=" * 60 + "\n")
    return 0
