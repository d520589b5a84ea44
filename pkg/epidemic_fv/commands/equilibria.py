import argparse
import logging
from typing import Optional, Sequence

from pydantic import ValidationError

from ..exceptions import EpidemicFVError, NoEquilibriumError, ParameterError
from ..schemas.params import ModelParams, Variant
from ..services.analysis_service import sars_equilibria, stability
from ..services.config_service import load_config

logger = logging.getLogger(__name__)


def add_model_arguments(parser: argparse.ArgumentParser) -> None:
    """SARS parameter flags; defaults are the Example 2 values"""
    defaults = ModelParams.example2()
    parser.add_argument("--config", help="take the parameters from the [model] section of a run config")
    parser.add_argument("--A", type=float, default=defaults.A, help="recruitment rate")
    parser.add_argument("--r", type=float, default=defaults.r, help="treatment capacity")
    parser.add_argument("--mu", type=float, default=defaults.mu, help="natural mortality rate")
    parser.add_argument("--gamma", type=float, default=defaults.gamma, help="recovery rate")
    parser.add_argument("--alpha", type=float, default=defaults.alpha_incidence, help="incidence rate")


def model_from_args(args: argparse.Namespace, alpha: Optional[float] = None) -> ModelParams:
    if args.config:
        params = load_config(args.config).model
        if alpha is not None:
            params = params.model_copy(update={"alpha_incidence": alpha})
        return params
    try:
        return ModelParams(
            alpha_incidence=args.alpha if alpha is None else alpha,
            mu=args.mu,
            gamma=args.gamma,
            variant=Variant.SARS,
            A=args.A,
            r=args.r,
        )
    except ValidationError as e:
        raise ParameterError(str(e))


def register(subparsers) -> None:
    parser = subparsers.add_parser("equilibria", help="SARS equilibria with their stability verdicts")
    add_model_arguments(parser)
    parser.add_argument(
        "--sweep-alpha", type=float, nargs="+", metavar="ALPHA", help="one row per incidence rate"
    )
    parser.set_defaults(handler=cmd_equilibria)


def format_point(point: Sequence[float]) -> str:
    return "(" + ", ".join(f"{c:.9f}" for c in point) + ")"


def verdict(params: ModelParams, point: Sequence[float], positive: bool) -> str:
    if not positive:
        return "flagged point (nonpositive component)"
    try:
        report = stability(params, point)
    except EpidemicFVError as e:
        return f"not evaluated: {e.detail}"
    return "linearly stable" if report.routh_condition_holds else "unstable"


def print_equilibria(params: ModelParams) -> bool:
    """Print one parameter set; False when there are no real equilibria"""
    print(
        f"\nalpha={params.alpha_incidence:g}  mu={params.mu:g}  gamma={params.gamma:g}  "
        f"A={params.A:g}  r={params.r:g}"
    )
    try:
        eq = sars_equilibria(params)
    except NoEquilibriumError as e:
        print(f"  ❌ {e.detail}")
        return False
    print(f"  discriminant = {eq.discriminant:.9f}")
    print(f"  E1 = {format_point(eq.E1)}  {verdict(params, eq.E1, eq.E1_positive)}")
    print(f"  E2 = {format_point(eq.E2)}  {verdict(params, eq.E2, eq.E2_positive)}")
    return True


def cmd_equilibria(args: argparse.Namespace) -> int:
    alphas = args.sweep_alpha or [None]
    print("\n" + "=" * 60)
    print("  SARS EQUILIBRIA")
    print("=" * 60)
    found = [print_equilibria(model_from_args(args, alpha)) for alpha in alphas]
    print("\n" + "=" * 60 + "\n")
    if not any(found):
        return NoEquilibriumError.exit_code
    return 0
