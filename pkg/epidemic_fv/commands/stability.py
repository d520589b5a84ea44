import argparse
import logging

import numpy as np

from ..exceptions import ParameterError
from ..services.analysis_service import sars_equilibria, stability, turing_cross_check, turing_scan
from .equilibria import add_model_arguments, format_point, model_from_args

logger = logging.getLogger(__name__)

# (d1, d2) grid of the Turing cross-check table, d3 = d1
GRID_D1 = np.geomspace(0.1, 100.0, 20)
GRID_D2 = np.geomspace(1e-5, 1.0, 20)


def register(subparsers) -> None:
    parser = subparsers.add_parser("stability", help="linear stability and Turing analysis of a SARS point")
    add_model_arguments(parser)
    parser.add_argument("--point", type=float, nargs=3, metavar=("U", "V", "W"), help="point to analyse (default E2)")
    parser.add_argument("--d1", type=float, help="diffusivity of the susceptible population")
    parser.add_argument("--d2", type=float, help="diffusivity of the infected population")
    parser.add_argument("--d3", type=float, help="diffusivity of the recovered population (default d1)")
    parser.add_argument(
        "--grid", action="store_true", help="print the 20x20 (d1, d2) polynomial vs eigenvalue-scan table"
    )
    parser.set_defaults(handler=cmd_stability)


def _complex(pair) -> str:
    re_, im = pair
    return f"{re_:.9f}{im:+.9f}i"


def cmd_stability(args: argparse.Namespace) -> int:
    params = model_from_args(args)
    point = tuple(args.point) if args.point else sars_equilibria(params).E2
    report = stability(params, point)

    print("\n" + "=" * 60)
    print("  LINEAR STABILITY")
    print("=" * 60)
    print(f"Point:        {format_point(point)}")
    print("Jacobian:")
    for row in report.jacobian:
        print("  " + "  ".join(f"{v:14.9f}" for v in row))
    print(f"Eigenvalues:  {', '.join(_complex(p) for p in report.eigenvalues)}")
    print(f"Cubic check:  {', '.join(_complex(p) for p in report.cubic_eigenvalues)}")
    print(f"Quadratic:    lambda^2 + {report.quadratic[1]:.9f} lambda + {report.quadratic[2]:.9f}")
    print(f"Condition:    {'holds' if report.routh_condition_holds else 'fails'} (inequality), "
          f"{'holds' if report.coefficient_test_holds else 'fails'} (coefficients)")

    if args.d1 is not None or args.d2 is not None:
        if args.d1 is None or args.d2 is None:
            raise ParameterError("Turing analysis needs both --d1 and --d2")
        d3 = args.d1 if args.d3 is None else args.d3
        if not report.routh_condition_holds:
            print("\n⚠️  Point is not linearly stable; Turing analysis does not apply")
        else:
            verdict = turing_scan(params, point, args.d1, args.d2, d3)
            print(f"\nDiffusivities: d1={args.d1:g}  d2={args.d2:g}  d3={d3:g}")
            print(f"Eigenvalue scan:  {'Turing-unstable' if verdict.turing_unstable else 'stable'}"
                  f" (max growth {verdict.max_growth:.6e})")
            if verdict.witness_k2 is not None:
                print(f"Witness k^2:      {verdict.witness_k2:.6g}")
            if verdict.polynomial_value is not None:
                print(f"Polynomial:       {verdict.polynomial_value:.9f} "
                      f"({'Turing-unstable' if verdict.polynomial_unstable else 'stable'})")
                print(f"Verdicts agree:   {'yes' if verdict.agree else 'no'}")

    if args.grid:
        if not report.routh_condition_holds:
            raise ParameterError("the cross-check grid needs a linearly stable point")
        rows = turing_cross_check(params, point, GRID_D1, GRID_D2)
        print("\n" + "-" * 60)
        print(f"{'d1':>12} {'d2':>12} {'polynomial':>14} {'poly':>6} {'scan':>6}")
        for row in rows:
            flag = "" if row.agree else "  <- disagree"
            print(
                f"{row.d1:12.6g} {row.d2:12.6g} {row.polynomial_value:14.6e} "
                f"{'T' if row.polynomial_unstable else '-':>6} {'T' if row.scan_unstable else '-':>6}{flag}"
            )
        disagreements = [r for r in rows if not r.agree]
        print(f"\n📊 {len(disagreements)} of {len(rows)} grid points disagree")

    print("=" * 60 + "\n")
    return 0
