"""Walker-ensemble quantum Monte Carlo with spatially resolved
entanglement and coherence measures on periodic 1D/2D lattices."""

from .grid import Field, Grid, make_grid, wrap_position, interpolate
from .kernel import INFINITY, SigmaParams
from .potentials import LatticeSpec, coulomb_ee, lattice_potential, sample_on_grid
from .propagator import StepParams
from .ensemble import TdqmcState, init_ensemble, optimize_sigma, relax, total_energy
from .quantum_info import (
    EntropyMap,
    ReducedDensityMatrix,
    ZonePartition,
    coherence_map,
    linear_coherence,
    linear_entropy,
    local_entropy_map,
    make_partition,
    purity,
    reduced_density_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "Field", "Grid", "make_grid", "wrap_position", "interpolate",
    "INFINITY", "SigmaParams",
    "LatticeSpec", "coulomb_ee", "lattice_potential", "sample_on_grid",
    "StepParams",
    "TdqmcState", "init_ensemble", "optimize_sigma", "relax", "total_energy",
    "EntropyMap", "ReducedDensityMatrix", "ZonePartition",
    "coherence_map", "linear_coherence", "linear_entropy", "local_entropy_map",
    "make_partition", "purity", "reduced_density_matrix",
    "__version__",
]
