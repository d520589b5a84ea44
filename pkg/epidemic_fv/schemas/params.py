from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Variant(str, Enum):
    BASE_SIR = "sir"
    SARS = "sars"


class ModelParams(BaseModel):
    """Reaction parameters. A and r only enter the SARS variant."""

    model_config = ConfigDict(frozen=True)

    alpha_incidence: float = Field(ge=0.0)  # incidence rate, not the mesh regularity constant
    mu: float = Field(ge=0.0)  # natural mortality rate
    gamma: float = Field(ge=0.0)  # recovery rate; 1/gamma is the latency period
    variant: Variant = Variant.BASE_SIR
    A: float = Field(default=0.0, ge=0.0)  # recruitment rate
    r: float = Field(default=0.0, ge=0.0)  # treatment capacity

    @model_validator(mode="after")
    def check_variant_terms(self):
        if self.variant == Variant.BASE_SIR and (self.A != 0.0 or self.r != 0.0):
            raise ValueError("A and r are SARS parameters; set variant = sars to use them")
        return self

    @property
    def is_sars(self) -> bool:
        return self.variant == Variant.SARS

    @classmethod
    def example1(cls) -> "ModelParams":
        return cls(alpha_incidence=2.0, mu=0.01, gamma=1.0)

    @classmethod
    def example2(cls) -> "ModelParams":
        return cls(alpha_incidence=3.8, mu=0.3, gamma=0.8, variant=Variant.SARS, A=3.0, r=0.5)


class DiffusionKind(str, Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    TRUNCATED_LINEAR = "truncated_linear"
    TRUNCATED_INVERSE_SQUARE = "truncated_inverse_square"


_REQUIRED = {
    DiffusionKind.CONSTANT: ("c",),
    DiffusionKind.LINEAR: ("slope",),
    DiffusionKind.TRUNCATED_LINEAR: ("M", "eps"),
    DiffusionKind.TRUNCATED_INVERSE_SQUARE: ("d", "u_tilde", "M", "eps"),
}


class DiffusionLaw(BaseModel):
    """
    Nonlocal diffusion coefficient a(s), s being the total mass of the species.

    constant                  a(s) = c
    linear                    a(s) = slope * s (not bounded below; checked when evaluated)
    truncated_linear          a(s) = clamp(slope * s, eps, M), slope defaults to 1
    truncated_inverse_square  a(s) = clamp(d / (s - u_tilde)^2, eps, M)
    """

    model_config = ConfigDict(frozen=True)

    kind: DiffusionKind
    c: Optional[float] = Field(default=None, gt=0.0)
    slope: Optional[float] = Field(default=None, gt=0.0)
    M: Optional[float] = Field(default=None, gt=0.0)
    eps: Optional[float] = Field(default=None, gt=0.0)
    d: Optional[float] = Field(default=None, gt=0.0)
    u_tilde: Optional[float] = None

    @model_validator(mode="after")
    def check_parameters(self):
        missing = [name for name in _REQUIRED[self.kind] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind.value} law needs {', '.join(missing)}")
        if self.M is not None and self.eps is not None and self.eps > self.M:
            raise ValueError(f"eps={self.eps} exceeds M={self.M}")
        return self

    @property
    def is_truncated(self) -> bool:
        return self.kind in (DiffusionKind.TRUNCATED_LINEAR, DiffusionKind.TRUNCATED_INVERSE_SQUARE)

    @classmethod
    def constant(cls, c: float) -> "DiffusionLaw":
        return cls(kind=DiffusionKind.CONSTANT, c=c)

    @classmethod
    def linear(cls, slope: float) -> "DiffusionLaw":
        return cls(kind=DiffusionKind.LINEAR, slope=slope)

    @classmethod
    def truncated_linear(cls, M: float = 1e4, eps: float = 1e-4, slope: Optional[float] = None) -> "DiffusionLaw":
        return cls(kind=DiffusionKind.TRUNCATED_LINEAR, M=M, eps=eps, slope=slope)

    @classmethod
    def truncated_inverse_square(cls, d: float, u_tilde: float, M: float = 1e4, eps: float = 1e-4) -> "DiffusionLaw":
        return cls(kind=DiffusionKind.TRUNCATED_INVERSE_SQUARE, d=d, u_tilde=u_tilde, M=M, eps=eps)
