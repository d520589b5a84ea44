from enum import Enum
import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .params import DiffusionLaw, ModelParams


class NonlocalSum(str, Enum):
    INTEGRAL = "integral"  # sum_K m(K) u_K, the discrete integral
    CELL_SUM = "cell_sum"  # sum_K u_K, as the scheme is printed


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dt: float = Field(gt=0.0)
    t_end: float = Field(gt=0.0)
    picard_tol: float = Field(default=1e-8, gt=0.0)
    picard_max: int = Field(default=200, ge=1)
    damping: float = Field(default=1.0, gt=0.0, le=1.0)
    cg_tol: float = Field(default=1e-10, gt=0.0)
    cg_max: Optional[int] = Field(default=None, ge=1)  # None means 10 * number of cells
    nonlocal_sum: NonlocalSum = NonlocalSum.INTEGRAL
    nonnegativity_tol: float = Field(default=1e-12, ge=0.0)
    energy_envelope_factor: float = Field(default=1.0, gt=0.0)
    strict_monitors: bool = True

    @property
    def n_steps(self) -> int:
        """Smallest N with N * dt >= t_end"""
        return max(1, math.ceil(round(self.t_end / self.dt, 9)))


class MeshSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    nx: int = Field(default=100, ge=1)
    ny: int = Field(default=100, ge=1)
    lx: float = Field(default=1.0, gt=0.0)
    ly: float = Field(default=1.0, gt=0.0)


class InitialPreset(str, Enum):
    EXAMPLE1 = "example1"
    EXAMPLE2_RANDOM = "example2-random"
    CONSTANT = "constant"
    FILE = "file"


class InitialSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    preset: InitialPreset = InitialPreset.EXAMPLE1
    seed: Optional[int] = Field(default=None, ge=0)
    values: Optional[tuple[float, float, float]] = None  # constant preset
    path: Optional[str] = None  # file preset: snapshot-format CSV
    eps: tuple[float, float, float] = (0.001, 0.001, 0.001)  # example2-random amplitudes

    @model_validator(mode="after")
    def check_preset_inputs(self):
        if self.preset == InitialPreset.EXAMPLE2_RANDOM and self.seed is None:
            raise ValueError("example2-random initial data needs a seed")
        if self.preset == InitialPreset.CONSTANT and self.values is None:
            raise ValueError("constant initial data needs values")
        if self.preset == InitialPreset.FILE and not self.path:
            raise ValueError("file initial data needs a path")
        return self


class OutputSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    directory: Optional[str] = None
    snapshot_times: tuple[float, ...] = ()

    @field_validator("snapshot_times")
    @classmethod
    def check_times(cls, value):
        if any(t < 0 for t in value):
            raise ValueError("snapshot times must be nonnegative")
        return tuple(sorted(value))


class ManufacturedKind(str, Enum):
    COSINE = "cosine"  # u_i = 2 + cos(pi x / lx) cos(pi y / ly) exp(-t)
    CONSTANT = "constant"  # u_i = c_i, held steady by compensating sources


class ManufacturedSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ManufacturedKind
    values: Optional[tuple[float, float, float]] = None

    @model_validator(mode="after")
    def check_values(self):
        if self.kind == ManufacturedKind.CONSTANT and self.values is None:
            raise ValueError("constant manufactured solution needs values")
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: ModelParams
    diffusion: tuple[DiffusionLaw, DiffusionLaw, DiffusionLaw]
    mesh: MeshSpec = MeshSpec()
    solver: SolverConfig
    initial: InitialSpec = InitialSpec()
    output: OutputSpec = OutputSpec()
    manufactured: Optional[ManufacturedSpec] = None
    levels: List[int] = []  # mesh sizes for the convergence command
