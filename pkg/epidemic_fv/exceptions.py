"""
Error hierarchy. Every error carries a human readable detail and the exit status the
command line uses when it reaches the top level.
"""
from typing import Optional


class EpidemicFVError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class MeshError(EpidemicFVError, ValueError):
    """Invalid geometry, index out of range or a field/mesh size mismatch"""
    exit_code = 2


class NotApplicableError(MeshError):
    """Query that has no meaning for the given mesh (e.g. regularity without interfaces)"""


class ParameterError(EpidemicFVError, ValueError):
    exit_code = 2


class ConfigError(EpidemicFVError):
    exit_code = 2

    def __init__(self, detail: str, line: Optional[int] = None):
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line


class ConvergenceError(EpidemicFVError):
    exit_code = 3

    def __init__(self, detail: str, report=None, step_index: Optional[int] = None):
        super().__init__(detail)
        self.report = report
        self.step_index = step_index  # time step (1-based) during which the failure occurred


class LinearSolveError(ConvergenceError):
    """Conjugate gradient did not reach the tolerance; `report` is the SolveReport"""


class PicardError(ConvergenceError):
    """Fixed-point iteration of one time step did not converge; `report` is the StepReport"""


class MonitorError(EpidemicFVError):
    """A runtime property monitor (nonnegativity, energy envelope) was violated"""
    exit_code = 4


class NoEquilibriumError(EpidemicFVError):
    exit_code = 5


class DiagnosticsError(EpidemicFVError, ValueError):
    exit_code = 5
