"""Reduced density matrices, linear entropy, zone partitions and coherence.

The one-electron reduced density matrix is the ensemble average of guide-wave
outer products; its purity Tr(rho^2) is computed through the Gram matrix of
wave overlaps, never materializing the dense matrix unless explicitly asked.
Zone-local variants restrict the average to walkers inside one cell of an
equal-width partition (21 per axis by default) and renormalize the trace.

Linear entropy S_L = 1 - Tr(rho^2) quantifies mixedness; the linear
coherence S_L(diag(rho)) - S_L(rho) measures position-basis superposition
lost under dephasing. Empty zones are reported as missing data (NaN with
walker count 0), never as zero entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyZoneError
from .grid import Field, Grid, wrap_position

__all__ = [
    "ReducedDensityMatrix",
    "ZonePartition",
    "EntropyMap",
    "reduced_density_matrix",
    "purity",
    "linear_entropy",
    "make_partition",
    "local_density_matrix",
    "local_entropy_map",
    "linear_coherence",
    "coherence_map",
    "entropy_map_from_ensemble",
    "coherence_map_from_ensemble",
]


@dataclass
class ReducedDensityMatrix:
    """Dense Hermitian matrix over grid nodes with the measure folded in."""

    grid: Grid
    entries: np.ndarray
    trace_normalized: bool = True

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def purity(self) -> float:
        """Tr(rho^2); uses Hermiticity, so it is the squared Frobenius norm."""
        return float(np.sum(np.abs(self.entries) ** 2))

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


def _wave_stack(waves, grid: Grid | None = None):
    """Accept a list of Fields or a raw (M, *shape) array plus grid."""
    if isinstance(waves, np.ndarray):
        if grid is None:
            raise ValueError("grid is required when passing a raw wave stack")
        return waves, grid
    waves = list(waves)
    if not waves:
        raise ValueError("empty wave ensemble")
    g = waves[0].grid
    return np.stack([w.values for w in waves]), g


def reduced_density_matrix(waves, grid: Grid | None = None) -> ReducedDensityMatrix:
    """Ensemble-averaged outer product of the guide waves, unit trace.

    entries[a, b] = (1/M) sum_k conj(phi_k(x_a)) phi_k(x_b) * spacing^dim,
    Hermitian by construction. Intended for modest grids; large maps should
    use the Gram-based routes instead.
    """
    stack, g = _wave_stack(waves, grid)
    flat = stack.reshape(stack.shape[0], -1)
    entries = (flat.conj().T @ flat) * (g.cell_measure / flat.shape[0])
    return ReducedDensityMatrix(g, entries, trace_normalized=True)


def _gram(flat: np.ndarray, measure: float) -> np.ndarray:
    return (flat.conj() @ flat.T) * measure


def purity(waves, grid: Grid | None = None) -> float:
    """Tr(rho^2) via the Gram matrix of wave overlaps, no dense matrix."""
    stack, g = _wave_stack(waves, grid)
    flat = stack.reshape(stack.shape[0], -1)
    gram = _gram(flat, g.cell_measure)
    m = flat.shape[0]
    return float(np.sum(np.abs(gram) ** 2) / m**2)


def linear_entropy(waves, grid: Grid | None = None) -> float:
    """Global spatial entanglement measure 1 - Tr(rho^2), in [0, 1)."""
    return 1.0 - purity(waves, grid)


@dataclass(frozen=True)
class ZonePartition:
    """Equal-width tiling of the periodic domain, n zones per axis."""

    grid: Grid
    n_zones_per_axis: int

    def __post_init__(self):
        if self.n_zones_per_axis < 1:
            raise ValueError("need at least one zone per axis")

    @property
    def zone_width(self) -> float:
        return self.grid.extent / self.n_zones_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_zones_per_axis,) * self.grid.dim

    @property
    def n_zones(self) -> int:
        return self.n_zones_per_axis**self.grid.dim

    def zone_centers(self) -> np.ndarray:
        """Zone center coordinate along one axis, shape (n_zones_per_axis,)."""
        return (-0.5 * self.grid.extent
                + self.zone_width * (np.arange(self.n_zones_per_axis) + 0.5))

    def zone_of(self, positions) -> np.ndarray:
        """Per-axis zone indices of positions, wrapped first; shape (..., dim)."""
        pos = np.atleast_2d(np.asarray(positions, dtype=float))
        pos = wrap_position(self.grid, pos)
        idx = np.floor((pos + 0.5 * self.grid.extent) / self.zone_width).astype(np.int64)
        return np.clip(idx, 0, self.n_zones_per_axis - 1)

    def node_zones(self) -> np.ndarray:
        """Zone index tuple of every grid node, shape (n_points, dim)."""
        return self.zone_of(self.grid.node_positions())


def make_partition(grid: Grid, n_zones_per_axis: int = 21) -> ZonePartition:
    return ZonePartition(grid, int(n_zones_per_axis))


@dataclass
class EntropyMap:
    """Per-zone scalar map; empty zones are NaN with walker count zero."""

    partition: ZonePartition
    values: np.ndarray
    walker_counts: np.ndarray
    kind: str

    @property
    def empty_mask(self) -> np.ndarray:
        return self.walker_counts == 0

    def occupied_values(self) -> np.ndarray:
        return self.values[~self.empty_mask]


def _zone_members(partition: ZonePartition, positions: np.ndarray) -> dict:
    """Walker indices per occupied zone, ordered canonically by position.

    Sorting members by coordinates makes every downstream reduction
    independent of the ensemble ordering, so permuting walkers reproduces
    maps bit-identically.
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    idx = partition.zone_of(pos)
    order = np.lexsort(tuple(pos[:, ax] for ax in range(pos.shape[1] - 1, -1, -1)))
    members: dict[tuple, list] = {}
    for k in order:
        key = (int(idx[k, 0]),) if partition.grid.dim == 1 else (int(idx[k, 0]), int(idx[k, 1]))
        members.setdefault(key, []).append(int(k))
    return members


_GRAM_BLOCK_ROWS = 2048


def _zone_purity(flat: np.ndarray, measure: float) -> float:
    """Trace-normalized purity of a zone sub-ensemble via its Gram matrix.

    Accumulated in row blocks so large zone ensembles never materialize the
    full M_m x M_m Gram matrix.
    """
    m = flat.shape[0]
    total = 0.0
    trace = 0.0
    for start in range(0, m, _GRAM_BLOCK_ROWS):
        block = (flat[start:start + _GRAM_BLOCK_ROWS].conj() @ flat.T) * measure
        total += float(np.sum(np.abs(block) ** 2))
        diag_idx = np.arange(block.shape[0])
        trace += float(np.real(block[diag_idx, start + diag_idx]).sum())
    trace /= m
    return (total / m**2) / trace**2


def local_density_matrix(waves, positions, zone, grid: Grid | None = None,
                         partition: ZonePartition | None = None) -> ReducedDensityMatrix:
    """Unit-trace density matrix of the walkers inside one zone.

    zone: per-axis index tuple (or int in 1D). Raises EmptyZoneError when no
    walker lies in the zone, which is distinct from a meaningful entropy 0.
    """
    stack, g = _wave_stack(waves, grid)
    if partition is None:
        raise ValueError("a ZonePartition is required")
    key = (int(zone),) if np.ndim(zone) == 0 else tuple(int(z) for z in zone)
    members = _zone_members(partition, positions).get(key)
    if not members:
        raise EmptyZoneError(f"zone {key} contains no walkers")
    flat = stack.reshape(stack.shape[0], -1)[members]
    entries = (flat.conj().T @ flat) * (g.cell_measure / len(members))
    trace = float(np.real(np.trace(entries)))
    return ReducedDensityMatrix(g, entries / trace, trace_normalized=True)


def entropy_map_from_ensemble(stack: np.ndarray, positions: np.ndarray,
                              partition: ZonePartition, grid: Grid) -> EntropyMap:
    """Zone map of local linear entropy for one walker/wave ensemble."""
    return _map_from_ensemble(stack, positions, partition, grid, want_coherence=False)


def coherence_map_from_ensemble(stack: np.ndarray, positions: np.ndarray,
                                partition: ZonePartition, grid: Grid) -> EntropyMap:
    """Zone map of linear coherence for one walker/wave ensemble."""
    return _map_from_ensemble(stack, positions, partition, grid, want_coherence=True)


def _map_from_ensemble(stack, positions, partition, grid, want_coherence: bool) -> EntropyMap:
    flat = stack.reshape(stack.shape[0], -1)
    members = _zone_members(partition, positions)
    values = np.full(partition.shape, np.nan)
    counts = np.zeros(partition.shape, dtype=np.int64)
    for key, idx in members.items():
        sub = flat[idx]
        pur = _zone_purity(sub, grid.cell_measure)
        if want_coherence:
            diag = np.mean(np.abs(sub) ** 2, axis=0) * grid.cell_measure
            diag /= diag.sum()
            value = (1.0 - float(np.sum(diag**2))) - (1.0 - pur)
        else:
            value = 1.0 - pur
        values[key] = value
        counts[key] = len(idx)
    return EntropyMap(partition, values, counts,
                      kind="local_coherence" if want_coherence else "local_linear_entropy")


def _electron_map(state, electron, partition, builder) -> EntropyMap:
    """Dispatch over the three zone-ensemble conventions.

    electron=None pools every electron's (wave, walker) pairs into one zone
    ensemble, so a zone visited by several electrons mixes their distinct
    guide waves; this is what resolves entanglement concentrated between
    sites and at defects. An integer selects one electron's ensemble; "mean"
    averages the per-electron maps zone by zone.
    """
    if electron is None:
        stack = np.concatenate(state.waves, axis=0)
        positions = np.concatenate(state.positions, axis=0)
        return builder(stack, positions, partition, state.grid)
    if electron == "mean":
        maps = [builder(state.waves[i], state.positions[i], partition, state.grid)
                for i in range(state.n_electrons)]
        if len(maps) == 1:
            return maps[0]
        counts = np.sum([m.walker_counts for m in maps], axis=0)
        stacked = np.stack([m.values for m in maps])
        filled = np.where(np.isnan(stacked), 0.0, stacked)
        n_data = np.sum(~np.isnan(stacked), axis=0)
        values = np.where(n_data > 0, filled.sum(axis=0) / np.maximum(n_data, 1), np.nan)
        return EntropyMap(partition, values, counts, kind=maps[0].kind)
    return builder(state.waves[electron], state.positions[electron], partition,
                   state.grid)


def local_entropy_map(state, partition: ZonePartition, electron=None) -> EntropyMap:
    """Per-zone local linear entropy of the pooled zone ensembles.

    Pass an electron index for the single-electron map, or "mean" for the
    zone-wise average of per-electron maps.
    """
    return _electron_map(state, electron, partition, entropy_map_from_ensemble)


def coherence_map(state, partition: ZonePartition, electron=None) -> EntropyMap:
    """Per-zone linear coherence of the zone-local density matrices."""
    return _electron_map(state, electron, partition, coherence_map_from_ensemble)


def linear_coherence(rdm: ReducedDensityMatrix) -> float:
    """Linear-entropy coherence S_L(diag(rho)) - S_L(rho), >= 0 for states.

    Dephasing in the position basis zeroes the off-diagonal entries, so the
    difference reduces to Tr(rho^2) - Tr(diag(rho)^2).
    """
    if not rdm.trace_normalized:
        raise ValueError("linear_coherence requires a trace-normalized matrix")
    diag = rdm.diagonal()
    return float(rdm.purity() - np.sum(diag**2))
