"""
Run outputs: per-cell snapshot CSVs, the time-series CSV, the JSON manifest and the
failure marker.

Floats are written with 17 significant digits, so reading a file back gives the
in-memory values bit for bit.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Union

from ..exceptions import ConfigError
from ..models.mesh import Field, Mesh
from ..models.state import State
from ..schemas.reports import StepReport, TimeSeriesRow
from .solver_service import RunResult, RunSink

logger = logging.getLogger(__name__)

SNAPSHOT_HEADER = ["x", "y", "u1", "u2", "u3"]
TIME_SERIES_HEADER = ["t", "a1", "a2", "a3", "mass1", "mass2", "mass3", "min_u1", "min_u2", "min_u3"]
TIME_SERIES_FILE = "time_series.csv"
MANIFEST_FILE = "manifest.json"
FAILED_FILE = "FAILED"

PathLike = Union[str, Path]


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def snapshot_name(state: State) -> str:
    return f"snapshot_n{state.step_index:06d}.csv"


def write_snapshot(path: PathLike, mesh: Mesh, state: State) -> Path:
    """One row per cell in storage order: center coordinates then u1, u2, u3"""
    state.check_mesh(mesh)
    path = Path(path)
    centers = mesh.centers
    ys = centers[:, 1] if mesh.dimension > 1 else [0.0] * mesh.n_cells
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SNAPSHOT_HEADER)
        for x, y, a, b, c in zip(centers[:, 0], ys, state.u1.values, state.u2.values, state.u3.values):
            writer.writerow([fmt(x), fmt(y), fmt(a), fmt(b), fmt(c)])
    logger.debug(f"Snapshot t={state.time:g} written to {path}")
    return path


def read_snapshot(path: PathLike) -> tuple[Field, Field, Field]:
    """The three species fields stored in a snapshot file"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"snapshot file {path} does not exist")
    columns: List[List[float]] = [[], [], []]
    with path.open(newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != SNAPSHOT_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(SNAPSHOT_HEADER)}, got {header}", line=1)
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(SNAPSHOT_HEADER):
                raise ConfigError(f"{path}: expected 5 columns, got {len(row)}", line=line_no)
            try:
                for column, text in zip(columns, row[2:]):
                    column.append(float(text))
            except ValueError as e:
                raise ConfigError(f"{path}: {e}", line=line_no)
    if not columns[0]:
        raise ConfigError(f"{path}: snapshot has no cells")
    return tuple(Field(c) for c in columns)


def time_series_values(row: TimeSeriesRow) -> List[str]:
    return [fmt(getattr(row, name)) for name in TIME_SERIES_HEADER]


def read_time_series(path: PathLike) -> List[Dict[str, float]]:
    with Path(path).open(newline="") as f:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(f)]


def write_manifest(directory: PathLike, payload: Dict[str, Any]) -> Path:
    path = Path(directory) / MANIFEST_FILE
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_failure_marker(directory: PathLike, detail: str) -> Path:
    path = Path(directory) / FAILED_FILE
    path.write_text(detail.rstrip() + "\n")
    logger.error(f"❌ Run failed, marker written to {path}")
    return path


class CsvRunSink(RunSink):
    """
    Streams the time series and the scheduled snapshots of a run into `directory`.
    Rows are flushed as they arrive so a failed run keeps everything written so far.
    """

    def __init__(self, directory: PathLike, mesh: Mesh):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.mesh = mesh
        self.snapshots: List[Dict[str, Any]] = []
        self.step_reports: List[StepReport] = []
        self._file: Optional[TextIO] = None
        self._writer = None

    def on_start(self, state: State, row: TimeSeriesRow) -> None:
        self._file = (self.directory / TIME_SERIES_FILE).open("w", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(TIME_SERIES_HEADER)
        self._write_row(row)

    def _write_row(self, row: TimeSeriesRow) -> None:
        self._writer.writerow(time_series_values(row))
        self._file.flush()

    def on_step(self, previous: State, state: State, report: StepReport, row: TimeSeriesRow) -> None:
        self.step_reports.append(report)
        self._write_row(row)

    def on_snapshot(self, state: State) -> None:
        name = snapshot_name(state)
        write_snapshot(self.directory / name, self.mesh, state)
        self.snapshots.append({"file": name, "step": state.step_index, "time": state.time})

    def on_finish(self, result: RunResult) -> None:
        self.close()
        logger.info(f"✅ Outputs written to {self.directory}")

    def close(self) -> None:
        if self._file is not None and not self._file.closed:
            self._file.close()
