"""Uniform 2D grids, grid-sampled fields and the text field-file format.

Arrays are indexed ``values[i, j]`` with ``i`` along x and ``j`` along y, so
node ``(i, j)`` sits at ``(x0 + i*hx, y0 + j*hy)``.  ``nx`` and ``ny`` count
nodes.  The field file stores values in C order of that array, i.e. line
``2 + i*ny + j`` holds node ``(i, j)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    hx: float
    hy: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise DomainError(f"grid needs at least 3 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0):
            raise DomainError(f"grid spacings must be positive, got hx={self.hx}, hy={self.hy}")

    @classmethod
    def from_bounds(cls, nx, ny, xmin, xmax, ymin, ymax):
        """Grid with ``nx`` x ``ny`` nodes spanning the closed box."""
        return cls(int(nx), int(ny), (xmax - xmin) / (nx - 1), (ymax - ymin) / (ny - 1), xmin, ymin)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def h(self):
        return max(self.hx, self.hy)

    @property
    def x(self):
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self):
        return self.y0 + self.hy * np.arange(self.ny)

    def mesh(self):
        """Coordinate arrays ``X, Y`` of shape ``(nx, ny)``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def position(self, i, j):
        return (self.x0 + i * self.hx, self.y0 + j * self.hy)

    def nearest_node(self, x, y):
        i = int(round((x - self.x0) / self.hx))
        j = int(round((y - self.y0) / self.hy))
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise DomainError(f"point ({x}, {y}) lies outside the grid")
        return i, j

    def boundary_distance(self, i, j):
        """Physical distance from node ``(i, j)`` to the box boundary."""
        return min(i * self.hx, (self.nx - 1 - i) * self.hx, j * self.hy, (self.ny - 1 - j) * self.hy)

    def interior_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[1:-1, 1:-1] = True
        return mask

    def sample(self, func):
        """Evaluate ``func(X, Y)`` on the nodes and wrap it as a field."""
        X, Y = self.mesh()
        return ScalarField(self, np.broadcast_to(np.asarray(func(X, Y), dtype=float), self.shape).copy())


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise DimensionError(f"values have shape {values.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("scalar field contains non-finite values")
        object.__setattr__(self, "values", values)

    def __getitem__(self, idx):
        return self.values[idx]


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid2D
    components: np.ndarray  # shape (nx, ny, 2)

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != self.grid.shape + (2,):
            raise DimensionError(f"components have shape {comps.shape}, expected {self.grid.shape + (2,)}")
        if not np.all(np.isfinite(comps)):
            raise DomainError("vector field contains non-finite values")
        object.__setattr__(self, "components", comps)

    def norm(self):
        return np.hypot(self.components[..., 0], self.components[..., 1])


def check_same_grid(*fields):
    grids = {(f.grid.nx, f.grid.ny, f.grid.hx, f.grid.hy, f.grid.x0, f.grid.y0) for f in fields}
    if len(grids) != 1:
        raise DimensionError("fields are defined on different grids")


def _diff_axis(v, h, axis):
    """Central differences inside, one-sided second order at both ends."""
    v = np.moveaxis(v, axis, 0)
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    d[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    d[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return np.moveaxis(d, 0, axis)


def gradient_field(u: ScalarField) -> VectorField:
    """Discrete gradient of a grid field.

    Central differences at interior nodes and one-sided second-order
    differences on the boundary; exact on affine fields and, at interior
    nodes, on quadratics.
    """
    g = u.grid
    comps = np.stack([_diff_axis(u.values, g.hx, 0), _diff_axis(u.values, g.hy, 1)], axis=-1)
    return VectorField(g, comps)


def write_field(path, u: ScalarField):
    g = u.grid
    lines = [f"{g.nx} {g.ny} {g.hx!r} {g.hy!r} {g.x0!r} {g.y0!r}"]
    lines.extend("%.17g" % v for v in u.values.ravel())
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path) -> ScalarField:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 6:
            raise DomainError(f"{path}: header must be 'nx ny hx hy x0 y0'")
        nx, ny = int(header[0]), int(header[1])
        hx, hy, x0, y0 = (float(t) for t in header[2:])
        values = np.loadtxt(fh, dtype=float, ndmin=1)
    if values.size != nx * ny:
        raise DimensionError(f"{path}: expected {nx * ny} values, found {values.size}")
    grid = Grid2D(nx, ny, hx, hy, x0, y0)
    return ScalarField(grid, values.reshape(nx, ny))
