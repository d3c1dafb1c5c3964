"""Soft-core lattice potential with vacancies and soft-core electron repulsion.

Every site contributes an attractive screened soft-core well; a vacancy is the
omission of that site's term. Distances are minimum-image when a periodic
extent is supplied, so the lattice is genuinely periodic. Atomic units
throughout (e = m = hbar = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid

__all__ = ["LatticeSpec", "lattice_potential", "coulomb_ee", "sample_on_grid"]


@dataclass(frozen=True)
class LatticeSpec:
    """Site layout, vacancy set and interaction parameters of one lattice.

    sites/vacancies hold integer site coordinates: ints in 1D, (n, m) pairs
    in 2D. Physical site positions are coordinate * d.
    """

    dim: int
    sites: tuple
    vacancies: tuple = ()
    d: float = 4.0
    v0: float = -1.0
    a: float = 1.0
    screening: float = 1.11

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        sites = tuple(self._coerce(s) for s in self.sites)
        vacancies = tuple(self._coerce(v) for v in self.vacancies)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "vacancies", vacancies)
        if len(set(sites)) != len(sites):
            raise ValueError("duplicate lattice sites")
        if not set(vacancies) <= set(sites):
            raise ValueError("vacancies must be a subset of sites")
        if not self.active_sites:
            raise ValueError("all sites are vacant; no potential wells remain")
        if not (self.a > 0 and self.screening > 0 and self.d > 0):
            raise ValueError("d, a and screening length must all be positive")

    def _coerce(self, s) -> tuple:
        if self.dim == 1:
            if np.ndim(s) == 0:
                return (int(s),)
            s = tuple(int(c) for c in s)
            if len(s) != 1:
                raise ValueError(f"1D site must be a single integer, got {s}")
            return s
        s = tuple(int(c) for c in np.atleast_1d(s))
        if len(s) != 2:
            raise ValueError(f"2D site must be an (n, m) pair, got {s}")
        return s

    @property
    def active_sites(self) -> tuple:
        """Sites that actually carry a well, sorted for determinism."""
        vac = set(self.vacancies)
        return tuple(sorted(s for s in self.sites if s not in vac))

    def site_positions(self) -> np.ndarray:
        """Physical positions of the active sites, shape (n_active, dim)."""
        return np.asarray(self.active_sites, dtype=float) * self.d


def _min_image(delta: np.ndarray, extent: float | None) -> np.ndarray:
    if extent is None:
        return delta
    return delta - extent * np.round(delta / extent)


def lattice_potential(spec: LatticeSpec, r, extent: float | None = None):
    """Sum of screened soft-core wells over the non-vacant sites.

    r: position(s), shape (dim,), (..., dim) or a scalar in 1D. `extent`
    switches site distances to the minimum-image convention.
    """
    scalar_in = np.ndim(r) == 0
    pos = np.asarray(r, dtype=float)
    if scalar_in:
        pos = pos.reshape(1, 1)
    elif pos.shape[-1] != spec.dim:
        raise ValueError(f"position has {pos.shape[-1]} components, lattice is {spec.dim}D")
    sites = spec.site_positions()
    delta = _min_image(pos[..., None, :] - sites, extent)
    dist = np.sqrt(np.sum(delta**2, axis=-1))
    terms = spec.v0 / np.sqrt(dist**2 + spec.a**2) * np.exp(-dist / spec.screening)
    total = terms.sum(axis=-1)
    if scalar_in:
        return float(total[0])
    return float(total) if total.ndim == 0 else total


def coulomb_ee(r_i, r_j, a: float, extent: float | None = None):
    """Soft-core electron-electron repulsion e^2/sqrt(|ri-rj|^2 + a^2).

    Accepts single positions or (M, dim) batches; minimum-image distance
    when `extent` is given. Symmetric in its two arguments.
    """
    if not a > 0:
        raise ValueError(f"soft-core parameter must be positive, got {a}")
    delta = _min_image(np.asarray(r_i, dtype=float) - np.asarray(r_j, dtype=float), extent)
    d2 = np.sum(np.atleast_1d(delta) ** 2, axis=-1) if np.ndim(delta) > 0 else delta**2
    out = 1.0 / np.sqrt(d2 + a**2)
    return float(out) if np.ndim(out) == 0 else out


def sample_on_grid(spec: LatticeSpec, grid: Grid) -> Field:
    """Lattice potential evaluated at every node, cached for propagation."""
    if grid.dim != spec.dim:
        raise ValueError(f"grid is {grid.dim}D but lattice is {spec.dim}D")
    values = lattice_potential(spec, grid.node_positions(), extent=grid.extent)
    return Field(grid, values.reshape(grid.shape))
