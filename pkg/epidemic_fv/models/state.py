from dataclasses import dataclass

from ..exceptions import MeshError
from .mesh import Field, Mesh


@dataclass(frozen=True)
class State:
    """Susceptible, infected and recovered densities at time t^n."""

    u1: Field
    u2: Field
    u3: Field
    time: float = 0.0
    step_index: int = 0

    def __post_init__(self):
        if not len(self.u1) == len(self.u2) == len(self.u3):
            raise MeshError("the three species fields must have the same length")

    @property
    def fields(self) -> tuple[Field, Field, Field]:
        return self.u1, self.u2, self.u3

    def check_mesh(self, mesh: Mesh) -> None:
        if len(self.u1) != mesh.n_cells:
            raise MeshError(f"state has {len(self.u1)} cells, mesh has {mesh.n_cells}")

    def min(self) -> float:
        return min(f.min() for f in self.fields)

    @classmethod
    def zeros(cls, mesh: Mesh) -> "State":
        return cls(Field.zeros(mesh), Field.zeros(mesh), Field.zeros(mesh))
