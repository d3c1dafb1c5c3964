"""Uniform periodic meshes and scalar fields shared by all numerical modules.

Grids are 1D or 2D, always periodic, with nodes at x_j = -extent/2 + j*spacing.
Positions are (dim,) arrays (scalars accepted in 1D); walker batches are
(M, dim) arrays. Grids and fields are treated as immutable once shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "make_grid",
    "wrap_position",
    "interpolate",
    "interpolate_batch",
    "grad_stack",
    "norm",
    "normalize",
    "as_position_array",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic mesh over [-extent/2, extent/2) per axis."""

    dim: int
    extent: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")
        if self.points_per_axis < 8:
            raise ValueError(
                f"points_per_axis must be >= 8 for adequate resolution,"
                f" got {self.points_per_axis}"
            )

    @property
    def spacing(self) -> float:
        return self.extent / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def n_points(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def cell_measure(self) -> float:
        """Integration weight of one node, spacing**dim."""
        return self.spacing**self.dim

    def axis_coordinates(self) -> np.ndarray:
        """Node coordinates along one axis, shape (points_per_axis,)."""
        return -0.5 * self.extent + self.spacing * np.arange(self.points_per_axis)

    def node_positions(self) -> np.ndarray:
        """All node positions as a flat (n_points, dim) array, C order."""
        ax = self.axis_coordinates()
        if self.dim == 1:
            return ax[:, None]
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)


@dataclass
class Field:
    """One real or complex scalar per grid node, shape grid.shape."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def make_grid(dim: int, extent: float, points_per_axis: int) -> Grid:
    return Grid(dim=dim, extent=float(extent), points_per_axis=int(points_per_axis))


def as_position_array(r, dim: int) -> np.ndarray:
    """Coerce a position (scalar in 1D, sequence in 2D) to shape (dim,)."""
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    if arr.shape != (dim,):
        raise ValueError(f"position shape {arr.shape} incompatible with dim {dim}")
    return arr


def wrap_position(grid: Grid, r):
    """Map coordinates into [-extent/2, extent/2) by modular arithmetic.

    Accepts scalars, (dim,) positions or (M, dim) batches; returns the same
    structure. Idempotent.
    """
    half = 0.5 * grid.extent
    wrapped = np.mod(np.asarray(r, dtype=float) + half, grid.extent) - half
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(wrapped)
    return wrapped


def _axis_indices(grid: Grid, coords: np.ndarray):
    """Lower/upper node indices and fractional offset along one axis."""
    n = grid.points_per_axis
    f = (coords + 0.5 * grid.extent) / grid.spacing
    base = np.floor(f)
    t = f - base
    i0 = np.mod(base.astype(np.int64), n)
    i1 = np.mod(i0 + 1, n)
    return i0, i1, t


def interpolate_batch(grid: Grid, stack: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Interpolate wave k of `stack` at position k, multilinear and periodic.

    stack: (M, n) or (M, n, n); positions: (M, dim). A length-1 stack is
    broadcast over all positions.
    """
    positions = np.atleast_2d(positions)
    m = positions.shape[0]
    if stack.shape[0] == m:
        rows = np.arange(m)
    elif stack.shape[0] == 1:
        rows = np.zeros(m, dtype=np.int64)
    else:
        raise ValueError("stack length must be 1 or match the number of positions")
    if grid.dim == 1:
        i0, i1, t = _axis_indices(grid, positions[:, 0])
        return (1.0 - t) * stack[rows, i0] + t * stack[rows, i1]
    ix0, ix1, tx = _axis_indices(grid, positions[:, 0])
    iy0, iy1, ty = _axis_indices(grid, positions[:, 1])
    return ((1 - tx) * (1 - ty) * stack[rows, ix0, iy0]
            + (1 - tx) * ty * stack[rows, ix0, iy1]
            + tx * (1 - ty) * stack[rows, ix1, iy0]
            + tx * ty * stack[rows, ix1, iy1])


def interpolate(fld: Field, r):
    """Multilinear interpolation of a single field with periodic wraparound."""
    pos = as_position_array(r, fld.grid.dim)
    if not np.all(np.isfinite(pos)):
        raise ValueError(f"cannot interpolate at non-finite position {r!r}")
    value = interpolate_batch(fld.grid, fld.values[None, ...], pos[None, :])[0]
    if np.iscomplexobj(fld.values):
        return complex(value)
    return float(value)


def grad_stack(grid: Grid, stack: np.ndarray) -> list[np.ndarray]:
    """Centered-difference gradient of a wave stack, periodic, one array per axis.

    stack: (M, n) or (M, n, n); spatial axes are the trailing ones.
    """
    inv2h = 1.0 / (2.0 * grid.spacing)
    grads = []
    for ax in range(1, 1 + grid.dim):
        grads.append((np.roll(stack, -1, axis=ax) - np.roll(stack, 1, axis=ax)) * inv2h)
    return grads


def norm(fld: Field) -> float:
    """L2 norm with the grid measure folded in."""
    return float(np.sqrt(np.sum(np.abs(fld.values) ** 2) * fld.grid.cell_measure))


def normalize(fld: Field) -> Field:
    n = norm(fld)
    if n == 0:
        raise ValueError("cannot normalize a zero field")
    return Field(fld.grid, fld.values / n)
