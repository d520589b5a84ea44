import argparse
import logging
from pathlib import Path
from typing import Optional

from ..config import settings
from ..exceptions import EpidemicFVError
from ..models.mesh import build_cartesian, regularity_ratio
from ..schemas.reports import RunSummary
from ..schemas.run_config import RunConfig
from ..services.config_service import load_config, serialize_config
from ..services.initial_service import initial_state
from ..services.monitor_service import RunMonitor
from ..services.snapshot_service import CsvRunSink, write_failure_marker, write_manifest
from ..services.solver_service import run

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="simulate a configured problem and write its outputs")
    parser.add_argument("config", help="run configuration file")
    parser.add_argument("--seed", type=int, help="seed for example2-random initial data (overrides the config)")
    parser.add_argument("--out-dir", help="output directory (overrides the config)")
    parser.set_defaults(handler=cmd_run)


def output_directory(config: RunConfig, config_path: str, out_dir: Optional[str] = None) -> Path:
    if out_dir:
        return Path(out_dir)
    if config.output.directory:
        return Path(config.output.directory)
    return Path(settings.OUTPUT_ROOT) / Path(config_path).stem


def execute_run(config: RunConfig, directory: Path, seed: Optional[int] = None) -> RunSummary:
    """
    Run `config` writing snapshots, time series and manifest into `directory`.

    On failure the outputs written so far stay in place, the manifest records the
    failure, a FAILED marker holds the detail and the error is re-raised.
    """
    spec = config.mesh
    mesh = build_cartesian(spec.nx, spec.ny, spec.lx, spec.ly)
    effective_seed = config.initial.seed if seed is None else seed
    initial = initial_state(mesh, config.initial, config.model, seed=seed)

    sink = CsvRunSink(directory, mesh)
    monitor = RunMonitor(mesh, config.model, config.solver)
    failure: Optional[EpidemicFVError] = None
    try:
        run(
            initial,
            mesh,
            config.model,
            config.diffusion,
            config.solver,
            sinks=[sink, monitor],
            snapshot_times=config.output.snapshot_times,
        )
    except EpidemicFVError as e:
        failure = e
    finally:
        sink.close()

    reports = sink.step_reports
    summary = RunSummary(
        steps=len(reports),
        final_time=reports[-1].time if reports else initial.time,
        picard_iterations_total=sum(r.picard_iterations for r in reports),
        picard_iterations_max=max((r.picard_iterations for r in reports), default=0),
        cg_iterations_total=sum(r.cg_iterations for r in reports),
        monitors=monitor.summary(),
        failed=failure is not None,
        failure=failure.detail if failure is not None else None,
    )
    write_manifest(
        directory,
        {
            "config": serialize_config(config),
            "seed": effective_seed,
            "cells": mesh.n_cells,
            "regularity_ratio": regularity_ratio(mesh) if mesh.n_interfaces else None,
            "steps_planned": config.solver.n_steps,
            "summary": summary.model_dump(mode="json"),
            "snapshots": sink.snapshots,
            "monitor_violations": monitor.violations,
            "step_reports": [
                {
                    "step": r.step_index,
                    "time": r.time,
                    "picard_iterations": r.picard_iterations,
                    "picard_residual": r.picard_residual,
                    "damping": r.damping,
                    "cg_iterations": r.cg_iterations,
                    "coefficients": list(r.coefficients),
                    "min_raw": list(r.min_raw),
                }
                for r in reports
            ],
        },
    )
    if failure is not None:
        write_failure_marker(directory, failure.detail)
        raise failure
    return summary


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    directory = output_directory(config, args.config, args.out_dir)
    summary = execute_run(config, directory, seed=args.seed)
    m = summary.monitors

    print("\n" + "=" * 60)
    print("  RUN SUMMARY")
    print("=" * 60)
    print(f"Steps:              {summary.steps} (t = {summary.final_time:g})")
    print(f"Picard sweeps:      {summary.picard_iterations_total} (max {summary.picard_iterations_max} per step)")
    print(f"CG iterations:      {summary.cg_iterations_total}")
    print(f"Minimum value:      {m.min_value:.6e}")
    print(f"Max energy:         {m.energy_max:.6e}")
    envelope = "not applicable" if m.energy_envelope_max is None else f"{m.energy_envelope_max:.6e}"
    print(f"Energy envelope:    {envelope}")
    print(f"Gradient sums:      {', '.join(f'{g:.6e}' for g in m.gradient_sums)}")
    print(f"Incidence sum:      {m.incidence_sum:.6e}")
    print(f"Outputs:            {directory}")
    print("=" * 60 + "\n")
    return 0
