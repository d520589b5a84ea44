"""
Run configuration files: sectioned key = value text, parsed with configparser and
validated into RunConfig. Every error names the line of the offending key.

    [model]          variant, alpha, mu, gamma, A, r
    [mesh]           nx, ny, lx, ly
    [time]           dt, T
    [diffusion.1..3] kind, c, slope, M, eps, d, u_tilde (u_tilde may be E1 or E2)
    [initial]        preset, seed, values, path, eps
    [output]         directory, snapshot_times
    [solver]         picard_tol, picard_max, damping, cg_tol, cg_max, nonlocal_sum,
                     nonnegativity_tol, energy_envelope_factor, strict_monitors
    [manufactured]   kind, values
    [convergence]    levels

List values are comma separated.
"""
import configparser
from enum import Enum
import logging
from pathlib import Path
import re
from typing import Any, Dict, List, Optional, Tuple, Type, Union

from pydantic import BaseModel, ValidationError

from ..exceptions import ConfigError, EpidemicFVError
from ..schemas.params import DiffusionLaw, ModelParams
from ..schemas.run_config import (
    InitialSpec,
    ManufacturedSpec,
    MeshSpec,
    OutputSpec,
    RunConfig,
    SolverConfig,
)
from .analysis_service import sars_equilibria

logger = logging.getLogger(__name__)

# config key -> schema field, per section
SECTION_FIELDS: Dict[str, Dict[str, str]] = {
    "model": {"variant": "variant", "alpha": "alpha_incidence", "mu": "mu", "gamma": "gamma", "A": "A", "r": "r"},
    "mesh": {"nx": "nx", "ny": "ny", "lx": "lx", "ly": "ly"},
    "time": {"dt": "dt", "T": "t_end"},
    "diffusion": {k: k for k in ("kind", "c", "slope", "M", "eps", "d", "u_tilde")},
    "initial": {k: k for k in ("preset", "seed", "values", "path", "eps")},
    "output": {"directory": "directory", "snapshot_times": "snapshot_times"},
    "solver": {
        k: k
        for k in (
            "picard_tol",
            "picard_max",
            "damping",
            "cg_tol",
            "cg_max",
            "nonlocal_sum",
            "nonnegativity_tol",
            "energy_envelope_factor",
            "strict_monitors",
        )
    },
    "manufactured": {"kind": "kind", "values": "values"},
    "convergence": {"levels": "levels"},
}

LIST_KEYS = {
    ("initial", "values"),
    ("initial", "eps"),
    ("output", "snapshot_times"),
    ("manufactured", "values"),
    ("convergence", "levels"),
}

DIFFUSION_SECTIONS = ("diffusion.1", "diffusion.2", "diffusion.3")
REQUIRED_SECTIONS = ("model", "time") + DIFFUSION_SECTIONS

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


class LineIndex:
    """Line numbers of section headers and keys in the source text"""

    def __init__(self, text: str):
        self.sections: Dict[str, int] = {}
        self.keys: Dict[Tuple[str, str], int] = {}
        section = None
        for number, line in enumerate(text.splitlines(), start=1):
            header = _SECTION_RE.match(line)
            if header:
                section = header.group(1).strip()
                self.sections.setdefault(section, number)
                continue
            key = _KEY_RE.match(line)
            if key and section is not None:
                self.keys.setdefault((section, key.group(1).strip()), number)

    def line(self, section: str, key: Optional[str] = None) -> Optional[int]:
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section)


def _base(section: str) -> str:
    return "diffusion" if section in DIFFUSION_SECTIONS else section


def _read_parser(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (A, T, M)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside of any [section]", line=e.lineno)
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", line=e.lineno)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", line=e.lineno)
    except configparser.ParsingError as e:
        line, content = e.errors[0]
        raise ConfigError(f"cannot parse {content.strip()!r}", line=line)
    return parser


def _section_values(parser: configparser.ConfigParser, section: str, index: LineIndex) -> Dict[str, Any]:
    base = _base(section)
    fields = SECTION_FIELDS[base]
    values: Dict[str, Any] = {}
    for key, raw in parser.items(section):
        if key not in fields:
            raise ConfigError(f"unknown key {key!r} in [{section}]", line=index.line(section, key))
        raw = raw.strip()
        if (base, key) in LIST_KEYS:
            values[fields[key]] = [item.strip() for item in raw.split(",") if item.strip()]
        elif raw == "":
            continue
        else:
            values[fields[key]] = raw
    return values


def _validate(
    model: Type[BaseModel],
    values: Dict[str, Any],
    index: LineIndex,
    origins: Dict[str, Tuple[str, str]],
    section: str,
) -> Any:
    """model.model_validate(values), reporting the first error at its key's line"""
    try:
        return model.model_validate(values)
    except ValidationError as e:
        error = e.errors()[0]
        field = str(error["loc"][0]) if error["loc"] else None
        where = origins.get(field, (section, None)) if field else (section, None)
        key_label = f" {where[1]}" if where[1] else ""
        raise ConfigError(f"[{where[0]}]{key_label}: {error['msg']}", line=index.line(*where))


def _origins(section: str, fields: Dict[str, str]) -> Dict[str, Tuple[str, str]]:
    return {field: (section, key) for key, field in fields.items()}


def _resolve_u_tilde(values: Dict[str, Any], species: int, model: ModelParams, section: str, index: LineIndex) -> None:
    raw = values.get("u_tilde")
    if isinstance(raw, str) and raw.upper() in ("E1", "E2"):
        try:
            point = getattr(sars_equilibria(model), raw.upper())
        except EpidemicFVError as e:
            raise ConfigError(f"[{section}] u_tilde = {raw}: {e.detail}", line=index.line(section, "u_tilde"))
        values["u_tilde"] = point[species]


def parse_config(text: str) -> RunConfig:
    """Parse and validate the text of a run configuration"""
    index = LineIndex(text)
    parser = _read_parser(text)

    for section in parser.sections():
        if section == "diffusion" or _base(section) not in SECTION_FIELDS:
            raise ConfigError(f"unknown section [{section}]", line=index.line(section))
    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]")

    def section(name: str) -> Dict[str, Any]:
        return _section_values(parser, name, index) if parser.has_section(name) else {}

    model = _validate(ModelParams, section("model"), index, _origins("model", SECTION_FIELDS["model"]), "model")

    laws = []
    for species, name in enumerate(DIFFUSION_SECTIONS):
        values = section(name)
        _resolve_u_tilde(values, species, model, name, index)
        laws.append(_validate(DiffusionLaw, values, index, _origins(name, SECTION_FIELDS["diffusion"]), name))

    solver_values = {**section("time"), **section("solver")}
    solver_origins = {**_origins("time", SECTION_FIELDS["time"]), **_origins("solver", SECTION_FIELDS["solver"])}
    solver = _validate(SolverConfig, solver_values, index, solver_origins, "time")

    mesh = _validate(MeshSpec, section("mesh"), index, _origins("mesh", SECTION_FIELDS["mesh"]), "mesh")
    initial = _validate(InitialSpec, section("initial"), index, _origins("initial", SECTION_FIELDS["initial"]), "initial")
    output = _validate(OutputSpec, section("output"), index, _origins("output", SECTION_FIELDS["output"]), "output")

    manufactured = None
    if parser.has_section("manufactured"):
        manufactured = _validate(
            ManufacturedSpec,
            section("manufactured"),
            index,
            _origins("manufactured", SECTION_FIELDS["manufactured"]),
            "manufactured",
        )

    levels = section("convergence").get("levels", [])
    try:
        levels = [int(v) for v in levels]
    except ValueError:
        raise ConfigError(f"levels must be integers, got {levels}", line=index.line("convergence", "levels"))

    return RunConfig(
        model=model,
        diffusion=tuple(laws),
        mesh=mesh,
        solver=solver,
        initial=initial,
        output=output,
        manufactured=manufactured,
        levels=levels,
    )


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}")
    config = parse_config(text)
    logger.info(f"✅ Loaded config {path}")
    return config


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def _section_text(name: str, model: BaseModel, fields: Dict[str, str], skip_empty: bool = True) -> List[str]:
    lines = [f"[{name}]"]
    for key, field in fields.items():
        value = getattr(model, field)
        if value is None or (skip_empty and isinstance(value, (list, tuple)) and not value):
            continue
        lines.append(f"{key} = {_format(value)}")
    return lines


def serialize_config(config: RunConfig) -> str:
    """Text that parse_config turns back into an equal RunConfig"""
    blocks = [_section_text("model", config.model, SECTION_FIELDS["model"])]
    blocks.append(_section_text("mesh", config.mesh, SECTION_FIELDS["mesh"]))
    blocks.append(_section_text("time", config.solver, SECTION_FIELDS["time"]))
    for name, law in zip(DIFFUSION_SECTIONS, config.diffusion):
        blocks.append(_section_text(name, law, SECTION_FIELDS["diffusion"]))
    blocks.append(_section_text("initial", config.initial, SECTION_FIELDS["initial"]))
    blocks.append(_section_text("output", config.output, SECTION_FIELDS["output"]))
    blocks.append(_section_text("solver", config.solver, SECTION_FIELDS["solver"]))
    if config.manufactured is not None:
        blocks.append(_section_text("manufactured", config.manufactured, SECTION_FIELDS["manufactured"]))
    if config.levels:
        blocks.append(["[convergence]", f"levels = {_format(config.levels)}"])
    return "\n\n".join("\n".join(block) for block in blocks) + "\n"
