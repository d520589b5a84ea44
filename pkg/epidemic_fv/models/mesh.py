"""
Admissible finite-volume meshes and piecewise-constant fields.

A mesh is a set of control volumes (cells), the interior interfaces between pairs of
them and the boundary faces. Boundary faces carry the zero-flux Neumann condition
only, so they never produce unknowns. Nothing in the records assumes a Cartesian
layout; `build_cartesian` is simply the only builder shipped.
"""
from dataclasses import dataclass, field
from functools import cached_property
import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from ..exceptions import MeshError, NotApplicableError

logger = logging.getLogger(__name__)

MEASURE_RTOL = 1e-12


@dataclass(frozen=True)
class CellRecord:
    center: tuple[float, ...]
    measure: float
    diameter: float  # circumscribed diagonal, used by the regularity ratio


@dataclass(frozen=True)
class InterfaceRecord:
    cells: tuple[int, int]
    measure: float  # m(sigma_KL)
    distance: float  # d(K, L), distance between the two cell centers
    normal: tuple[float, ...]  # unit normal eta_KL, pointing from cells[0] to cells[1]


@dataclass(frozen=True)
class BoundaryFace:
    cell: int
    measure: float


@dataclass(frozen=True)
class CartesianGrid:
    nx: int
    ny: int
    lx: float
    ly: float

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    def index(self, i: int, j: int) -> int:
        """Row-major storage index of cell (i, j)"""
        return j * self.nx + i


@dataclass(frozen=True, eq=False)
class Mesh:
    cells: tuple[CellRecord, ...]
    interfaces: tuple[InterfaceRecord, ...]
    boundary_faces: tuple[BoundaryFace, ...]
    dimension: int
    domain_measure: float
    grid: Optional[CartesianGrid] = None

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise MeshError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if not self.cells:
            raise MeshError("a mesh needs at least one cell")

        n = len(self.cells)
        measures = self.measures
        if np.any(measures <= 0.0):
            raise MeshError("every cell needs a positive measure")
        total = float(np.sum(measures))
        if abs(total - self.domain_measure) > MEASURE_RTOL * self.domain_measure:
            raise MeshError(
                f"cell measures sum to {total!r}, domain measure is {self.domain_measure!r}"
            )

        seen = set()
        for idx, iface in enumerate(self.interfaces):
            k, l = iface.cells
            if not (0 <= k < n and 0 <= l < n) or k == l:
                raise MeshError(f"interface {idx} references invalid cells {iface.cells}")
            key = (min(k, l), max(k, l))
            if key in seen:
                raise MeshError(f"cell pair {key} appears in more than one interface")
            seen.add(key)
            if iface.measure <= 0.0 or iface.distance <= 0.0:
                raise MeshError(f"interface {idx} needs positive measure and distance")
            if len(iface.normal) != self.dimension:
                raise MeshError(f"interface {idx} normal has the wrong dimension")

        for face in self.boundary_faces:
            if not 0 <= face.cell < n or face.measure <= 0.0:
                raise MeshError(f"invalid boundary face {face}")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_interfaces(self) -> int:
        return len(self.interfaces)

    @cached_property
    def measures(self) -> np.ndarray:
        values = np.fromiter((c.measure for c in self.cells), dtype=float, count=len(self.cells))
        values.setflags(write=False)
        return values

    @cached_property
    def centers(self) -> np.ndarray:
        values = np.array([c.center for c in self.cells], dtype=float).reshape(len(self.cells), -1)
        values.setflags(write=False)
        return values

    @cached_property
    def diameters(self) -> np.ndarray:
        values = np.fromiter((c.diameter for c in self.cells), dtype=float, count=len(self.cells))
        values.setflags(write=False)
        return values

    @cached_property
    def cell_pairs(self) -> np.ndarray:
        """(n_interfaces, 2) array of the (K, L) indices"""
        values = np.array([i.cells for i in self.interfaces], dtype=np.int64).reshape(-1, 2)
        values.setflags(write=False)
        return values

    @cached_property
    def transmissibilities(self) -> np.ndarray:
        values = np.fromiter(
            (i.measure / i.distance for i in self.interfaces), dtype=float, count=len(self.interfaces)
        )
        values.setflags(write=False)
        return values

    @cached_property
    def normals(self) -> np.ndarray:
        values = np.array([i.normal for i in self.interfaces], dtype=float).reshape(-1, self.dimension)
        values.setflags(write=False)
        return values

    def transmissibility(self, index: int) -> float:
        return transmissibility(self, index)


@dataclass(frozen=True, eq=False)
class Field:
    """One real value per cell, indexed like Mesh.cells. Immutable."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise MeshError(f"a field is one value per cell, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise MeshError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, mesh: Mesh) -> "Field":
        return cls(np.zeros(mesh.n_cells))

    @classmethod
    def constant(cls, mesh: Mesh, value: float) -> "Field":
        return cls(np.full(mesh.n_cells, float(value)))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Field):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


FieldLike = Union[Field, Sequence[float], np.ndarray]


def field_values(mesh: Mesh, f: FieldLike) -> np.ndarray:
    """Return the values of `f` after checking they match the mesh"""
    values = f.values if isinstance(f, Field) else np.asarray(f, dtype=float)
    if values.shape != (mesh.n_cells,):
        raise MeshError(f"field has {values.shape} values, mesh has {mesh.n_cells} cells")
    return values


def build_cartesian(nx: int, ny: int, lx: float, ly: float) -> Mesh:
    """
    Uniform nx by ny grid on [0, lx] x [0, ly].

    Cells are stored row-major (index j*nx + i). Interfaces list the x-faces first,
    then the y-faces, each in increasing order of their first cell.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise MeshError(f"nx and ny must be positive integers, got ({nx}, {ny})")
    if not (lx > 0 and ly > 0):
        raise MeshError(f"lx and ly must be positive, got ({lx}, {ly})")
    nx, ny = int(nx), int(ny)
    grid = CartesianGrid(nx, ny, float(lx), float(ly))
    dx, dy = grid.dx, grid.dy
    measure = dx * dy
    diameter = math.hypot(dx, dy)

    cells = tuple(
        CellRecord(center=((i + 0.5) * dx, (j + 0.5) * dy), measure=measure, diameter=diameter)
        for j in range(ny)
        for i in range(nx)
    )

    x_faces = [
        InterfaceRecord(cells=(grid.index(i, j), grid.index(i + 1, j)), measure=dy, distance=dx, normal=(1.0, 0.0))
        for j in range(ny)
        for i in range(nx - 1)
    ]
    y_faces = [
        InterfaceRecord(cells=(grid.index(i, j), grid.index(i, j + 1)), measure=dx, distance=dy, normal=(0.0, 1.0))
        for j in range(ny - 1)
        for i in range(nx)
    ]

    boundary = []
    for j in range(ny):
        boundary.append(BoundaryFace(grid.index(0, j), dy))
        boundary.append(BoundaryFace(grid.index(nx - 1, j), dy))
    for i in range(nx):
        boundary.append(BoundaryFace(grid.index(i, 0), dx))
        boundary.append(BoundaryFace(grid.index(i, ny - 1), dx))

    mesh = Mesh(
        cells=cells,
        interfaces=tuple(x_faces + y_faces),
        boundary_faces=tuple(boundary),
        dimension=2,
        domain_measure=grid.lx * grid.ly,
        grid=grid,
    )
    logger.debug(f"Built {nx}x{ny} Cartesian mesh on [0,{lx}]x[0,{ly}]: {mesh.n_interfaces} interfaces")
    return mesh


def transmissibility(mesh: Mesh, index: int) -> float:
    """m(sigma_KL) / d(K, L) of interface `index`"""
    if not 0 <= index < mesh.n_interfaces:
        raise MeshError(f"interface index {index} out of range (mesh has {mesh.n_interfaces})")
    iface = mesh.interfaces[index]
    return iface.measure / iface.distance


def regularity_ratio(mesh: Mesh) -> float:
    """min over K and L in N(K) of d(K, L) / diam(K)"""
    if mesh.n_interfaces == 0:
        raise NotApplicableError("regularity ratio needs at least one interface")
    pairs = mesh.cell_pairs
    distances = np.fromiter((i.distance for i in mesh.interfaces), dtype=float, count=mesh.n_interfaces)
    diam = mesh.diameters
    # both orientations: K may be either side of the interface
    ratio_k = distances / diam[pairs[:, 0]]
    ratio_l = distances / diam[pairs[:, 1]]
    return float(min(ratio_k.min(), ratio_l.min()))


def discrete_gradient(mesh: Mesh, f: FieldLike) -> np.ndarray:
    """
    Discrete gradient on the interior diamonds T_KL.

    Row s is tau_KL * (u_L - u_K) * eta_KL for interface s. Boundary diamonds carry a
    zero gradient and are not listed, so a single-cell mesh gives an empty array.
    """
    u = field_values(mesh, f)
    if mesh.n_interfaces == 0:
        return np.zeros((0, mesh.dimension))
    pairs = mesh.cell_pairs
    jumps = u[pairs[:, 1]] - u[pairs[:, 0]]
    return (mesh.transmissibilities * jumps)[:, None] * mesh.normals
