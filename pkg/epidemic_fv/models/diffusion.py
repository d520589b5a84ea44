"""
Evaluation of the nonlocal diffusion laws a_i(s) and their bounds.
"""
import math

import numpy as np

from ..exceptions import ParameterError
from ..schemas.params import DiffusionKind, DiffusionLaw


def eval_diffusion(law: DiffusionLaw, s):
    """a(s) for a scalar or an array of total masses"""
    scalar = np.ndim(s) == 0
    s = np.asarray(s, dtype=float)

    if law.kind == DiffusionKind.CONSTANT:
        value = np.full_like(s, law.c)
    elif law.kind == DiffusionKind.LINEAR:
        value = law.slope * s
        if np.any(value <= 0.0):
            # the untruncated law is not bounded below by a positive constant
            raise ParameterError(f"linear diffusion law gives a nonpositive coefficient at s={s.min()!r}")
    elif law.kind == DiffusionKind.TRUNCATED_LINEAR:
        slope = law.slope if law.slope is not None else 1.0
        value = np.clip(slope * s, law.eps, law.M)
    else:
        gap = (s - law.u_tilde) ** 2
        with np.errstate(divide="ignore"):
            raw = np.where(gap > 0.0, law.d / np.where(gap > 0.0, gap, 1.0), np.inf)
        value = np.clip(raw, law.eps, law.M)

    return float(value) if scalar else value


def diffusion_bounds(law: DiffusionLaw) -> tuple[float, float]:
    """(min, max) of a(s) over all s; the linear law has no positive lower bound"""
    if law.is_truncated:
        return law.eps, law.M
    if law.kind == DiffusionKind.CONSTANT:
        return law.c, law.c
    return 0.0, math.inf


def lipschitz_constant(law: DiffusionLaw) -> float:
    """Global Lipschitz constant of a(s)"""
    if law.kind == DiffusionKind.CONSTANT:
        return 0.0
    if law.kind in (DiffusionKind.LINEAR, DiffusionKind.TRUNCATED_LINEAR):
        return law.slope if law.slope is not None else 1.0
    # |d/ds d/(s-u)^2| = 2d/|s-u|^3, largest where the clamp at M releases: |s-u| = sqrt(d/M)
    return 2.0 * law.M ** 1.5 / math.sqrt(law.d)
