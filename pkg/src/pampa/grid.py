"""Uniform 1D meshes, the average/point degree-of-freedom layout and ghost padding."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError


class BoundaryCondition(str, Enum):
    PERIODIC = "periodic"
    OUTFLOW = "outflow"


@dataclass(frozen=True)
class Grid1D:
    x_left: float
    x_right: float
    n_cells: int

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells

    def nodes(self) -> np.ndarray:
        """Coordinates x_j = x_left + j*dx, j = 0..n_cells."""
        return self.x_left + np.arange(self.n_cells + 1) * self.dx

    def centers(self) -> np.ndarray:
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    def n_nodes(self, bc: BoundaryCondition) -> int:
        return self.n_cells if BoundaryCondition(bc) is BoundaryCondition.PERIODIC else self.n_cells + 1

    def point_coordinates(self, bc: BoundaryCondition) -> np.ndarray:
        return self.nodes()[: self.n_nodes(bc)]


def build_grid(x_left: float, x_right: float, n_cells: int) -> Grid1D:
    if not (np.isfinite(x_left) and np.isfinite(x_right)) or x_right <= x_left:
        raise ConfigurationError(f"empty or inverted domain [{x_left}, {x_right}]")
    if int(n_cells) != n_cells or n_cells < 3:
        raise ConfigurationError(f"need at least 3 cells, got {n_cells}")
    return Grid1D(float(x_left), float(x_right), int(n_cells))


@dataclass(frozen=True)
class DoFField:
    """Cell averages and point values, stored as two separate arrays.

    Scalar problems use 1D arrays; the Euler system uses shape (n, 3)
    with columns (rho, m, E).
    """

    averages: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        avg = np.asarray(self.averages, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if avg.ndim != pts.ndim or avg.shape[1:] != pts.shape[1:]:
            raise ConfigurationError("averages and points must have the same component layout")
        if avg.ndim == 2 and avg.shape[1] not in (1, 3):
            raise ConfigurationError("state vectors must have 1 or 3 components")
        object.__setattr__(self, "averages", avg)
        object.__setattr__(self, "points", pts)

    @property
    def n_components(self) -> int:
        return 1 if self.averages.ndim == 1 else self.averages.shape[1]

    @property
    def n_cells(self) -> int:
        return self.averages.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.averages)) and np.all(np.isfinite(self.points)))

    def copy(self) -> "DoFField":
        return DoFField(self.averages.copy(), self.points.copy())

    def axpby(self, a: float, other: "DoFField", b: float) -> "DoFField":
        """Return a*self + b*other, applied to averages and points jointly."""
        return DoFField(a * self.averages + b * other.averages, a * self.points + b * other.points)

    def check_layout(self, grid: Grid1D, bc: BoundaryCondition) -> None:
        if self.n_cells != grid.n_cells or self.n_nodes != grid.n_nodes(bc):
            raise ConfigurationError(
                f"field has {self.n_cells} averages/{self.n_nodes} points, grid expects "
                f"{grid.n_cells}/{grid.n_nodes(bc)} for {BoundaryCondition(bc).value} boundaries"
            )


def _ghost_index(idx: np.ndarray, n: int, bc: BoundaryCondition) -> np.ndarray:
    if BoundaryCondition(bc) is BoundaryCondition.PERIODIC:
        return np.mod(idx, n)
    return np.clip(idx, 0, n - 1)


class PaddedView:
    """Read-only extension of a field by ``halo`` ghost entries on each side.

    ``avg(i)`` accepts cell indices -halo..n_cells-1+halo and ``pt(i)`` node
    indices -halo..n_nodes-1+halo.  The padded arrays are also exposed
    directly, offset by ``halo``.
    """

    def __init__(self, field: DoFField, bc: BoundaryCondition, halo: int = 2):
        if not 0 <= halo <= 2:
            raise ConfigurationError("halo must be 0, 1 or 2")
        self.halo = halo
        self.bc = BoundaryCondition(bc)
        nc, nn = field.n_cells, field.n_nodes
        self.averages = field.averages[_ghost_index(np.arange(-halo, nc + halo), nc, self.bc)]
        self.points = field.points[_ghost_index(np.arange(-halo, nn + halo), nn, self.bc)]

    def avg(self, i):
        return self.averages[np.asarray(i) + self.halo]

    def pt(self, i):
        return self.points[np.asarray(i) + self.halo]


def padded_view(field: DoFField, bc: BoundaryCondition, halo: int = 2) -> PaddedView:
    return PaddedView(field, bc, halo)
