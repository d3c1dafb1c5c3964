"""Run configuration: strict INI-style parsing with per-module sections.

Unknown sections or keys are rejected with a close-match suggestion; every
value is validated against the owning module's preconditions before a run
starts. Defaults follow the standard lattice parameter set (a = 1, V0 = -1,
screening length 1.11, 21 zones per axis).
"""

from __future__ import annotations

import configparser
import difflib
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .grid import Grid, make_grid
from .kernel import INFINITY
from .potentials import LatticeSpec
from .propagator import StepParams

__all__ = ["RunConfig", "load_config", "config_from_mapping"]

_SCHEMA = {
    "lattice": ("dim", "sites", "vacancies", "d", "v0", "a", "lambda"),
    "grid": ("extent", "points_per_axis"),
    "ensemble": ("n_electrons", "n_walkers", "seed", "init_width"),
    "stepping": ("dtau", "max_steps", "energy_tol", "record_interval",
                 "drift_epsilon", "drift_cap"),
    "sigma": ("value", "candidates", "candidate_walkers", "candidate_steps"),
    "partition": ("n_zones_per_axis",),
    "oracle": ("n_samples", "max_steps", "tol", "budget"),
    "output": ("directory", "artifacts"),
}

_ARTIFACTS = ("potential", "density", "entropy_map", "coherence_map",
              "entropy_profile", "coherence_profile", "summary")


@dataclass
class RunConfig:
    lattice: LatticeSpec
    grid: Grid
    n_electrons: int
    n_walkers: int
    seed: int
    init_width: float
    step_params: StepParams
    max_steps: int
    energy_tol: float
    record_interval: int
    sigma_value: float | None
    sigma_candidates: list | None
    candidate_walkers: int
    candidate_steps: int
    n_zones: int
    oracle_samples: int
    oracle_max_steps: int
    oracle_tol: float
    oracle_budget: int
    out_dir: str
    artifacts: tuple
    raw: dict = field(repr=False, default_factory=dict)


def _suggest(name: str, known) -> str:
    close = difflib.get_close_matches(name, list(known), n=1)
    return f"; did you mean '{close[0]}'?" if close else ""


def _parse_float(value: str, key: str) -> float:
    try:
        if value.strip().lower() in ("inf", "infinity"):
            return INFINITY
        return float(value)
    except ValueError:
        raise ConfigError(f"key '{key}': cannot parse '{value}' as a number") from None


def _parse_int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"key '{key}': cannot parse '{value}' as an integer") from None


def _parse_sites(text: str, dim: int, key: str):
    sites = []
    cleaned = text.replace(";", " ").strip()
    if not cleaned:
        return sites
    for token in cleaned.split():
        try:
            if dim == 1:
                sites.append(int(token))
            else:
                a, b = token.split(",")
                sites.append((int(a), int(b)))
        except ValueError:
            raise ConfigError(
                f"key '{key}': bad site '{token}'"
                + (" (2D sites are comma pairs like 0,1)" if dim == 2 else "")
            ) from None
    return sites


def load_config(path: str) -> RunConfig:
    """Parse and validate one INI run configuration."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"parse error in {path}: {exc}") from None
    mapping = {section: dict(parser.items(section)) for section in parser.sections()}
    return config_from_mapping(mapping)


def config_from_mapping(mapping: dict) -> RunConfig:
    """Build a validated RunConfig from {section: {key: string-value}}.

    This is also the manifest replay path: manifests store exactly this
    mapping, so re-running one revalidates through the same code.
    """
    for section, keys in mapping.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section '{section}'" + _suggest(section, _SCHEMA))
        for key in keys:
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key '{key}' in section '{section}'"
                    + _suggest(key, _SCHEMA[section])
                )

    def get(section, key, default=None):
        return mapping.get(section, {}).get(key, default)

    def require(section, key):
        value = get(section, key)
        if value is None:
            raise ConfigError(f"missing required key '{key}' in section '{section}'")
        return value

    dim = _parse_int(require("lattice", "dim"), "lattice.dim")
    if dim not in (1, 2):
        raise ConfigError(f"key 'lattice.dim': must be 1 or 2, got {dim}")
    sites = _parse_sites(require("lattice", "sites"), dim, "lattice.sites")
    if not sites:
        raise ConfigError("key 'lattice.sites': at least one site is required")
    vacancies = _parse_sites(get("lattice", "vacancies", ""), dim, "lattice.vacancies")
    try:
        lattice = LatticeSpec(
            dim=dim, sites=tuple(sites), vacancies=tuple(vacancies),
            d=_parse_float(get("lattice", "d", "4.0"), "lattice.d"),
            v0=_parse_float(get("lattice", "v0", "-1.0"), "lattice.v0"),
            a=_parse_float(get("lattice", "a", "1.0"), "lattice.a"),
            screening=_parse_float(get("lattice", "lambda", "1.11"), "lattice.lambda"),
        )
        grid = make_grid(dim, _parse_float(require("grid", "extent"), "grid.extent"),
                         _parse_int(require("grid", "points_per_axis"),
                                    "grid.points_per_axis"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    n_electrons = _parse_int(require("ensemble", "n_electrons"), "ensemble.n_electrons")
    n_walkers = _parse_int(require("ensemble", "n_walkers"), "ensemble.n_walkers")
    if n_electrons < 1 or n_walkers < 1:
        raise ConfigError("ensemble.n_electrons and ensemble.n_walkers must be >= 1")
    seed = _parse_int(get("ensemble", "seed", "12345"), "ensemble.seed")
    init_width = _parse_float(get("ensemble", "init_width", "1.0"), "ensemble.init_width")
    if not init_width > 0:
        raise ConfigError("key 'ensemble.init_width': must be positive")

    dtau = _parse_float(get("stepping", "dtau", "0.01"), "stepping.dtau")
    max_steps = _parse_int(get("stepping", "max_steps", "4000"), "stepping.max_steps")
    energy_tol = _parse_float(get("stepping", "energy_tol", "1e-6"), "stepping.energy_tol")
    record_interval = _parse_int(get("stepping", "record_interval", "1"),
                                 "stepping.record_interval")
    drift_epsilon = _parse_float(get("stepping", "drift_epsilon", "1e-8"),
                                 "stepping.drift_epsilon")
    drift_cap_raw = get("stepping", "drift_cap")
    drift_cap = None if drift_cap_raw is None else _parse_float(drift_cap_raw,
                                                                "stepping.drift_cap")
    try:
        step_params = StepParams(dtau=dtau, drift_epsilon=drift_epsilon,
                                 drift_cap=drift_cap)
    except ValueError as exc:
        raise ConfigError(f"section 'stepping': {exc}") from None
    if max_steps < 1:
        raise ConfigError("key 'stepping.max_steps': must be >= 1")
    if not energy_tol > 0:
        raise ConfigError("key 'stepping.energy_tol': must be positive")
    if record_interval < 1:
        raise ConfigError("key 'stepping.record_interval': must be >= 1")

    sigma_value_raw = get("sigma", "value")
    sigma_cands_raw = get("sigma", "candidates")
    if sigma_value_raw is not None and sigma_cands_raw is not None:
        raise ConfigError("section 'sigma': give either 'value' or 'candidates', not both")
    if sigma_value_raw is None and sigma_cands_raw is None:
        raise ConfigError("section 'sigma': one of 'value' or 'candidates' is required")
    sigma_value = None
    sigma_candidates = None
    if sigma_value_raw is not None:
        sigma_value = _parse_float(sigma_value_raw, "sigma.value")
        if not (sigma_value > 0 or math.isinf(sigma_value)):
            raise ConfigError("key 'sigma.value': must be positive or inf")
    else:
        sigma_candidates = [_parse_float(tok, "sigma.candidates")
                            for tok in sigma_cands_raw.split()]
        if not sigma_candidates:
            raise ConfigError("key 'sigma.candidates': list is empty")
        for v in sigma_candidates:
            if not (v > 0 or math.isinf(v)):
                raise ConfigError("key 'sigma.candidates': entries must be positive or inf")
    candidate_walkers = _parse_int(get("sigma", "candidate_walkers", str(n_walkers)),
                                   "sigma.candidate_walkers")
    candidate_steps = _parse_int(get("sigma", "candidate_steps", str(max_steps)),
                                 "sigma.candidate_steps")

    n_zones = _parse_int(get("partition", "n_zones_per_axis", "21"),
                         "partition.n_zones_per_axis")
    if n_zones < 1:
        raise ConfigError("key 'partition.n_zones_per_axis': must be >= 1")

    oracle_samples = _parse_int(get("oracle", "n_samples", "4000"), "oracle.n_samples")
    oracle_max_steps = _parse_int(get("oracle", "max_steps", "20000"), "oracle.max_steps")
    oracle_tol = _parse_float(get("oracle", "tol", "1e-10"), "oracle.tol")
    oracle_budget = _parse_int(get("oracle", "budget", "3000000"), "oracle.budget")

    out_dir = get("output", "directory", "out")
    artifacts_raw = get("output", "artifacts")
    if artifacts_raw is None:
        artifacts = _ARTIFACTS
    else:
        artifacts = tuple(artifacts_raw.split())
        for art in artifacts:
            if art not in _ARTIFACTS:
                raise ConfigError(f"key 'output.artifacts': unknown artifact '{art}'"
                                  + _suggest(art, _ARTIFACTS))

    if n_electrons > len(lattice.active_sites):
        raise ConfigError(
            f"ensemble.n_electrons = {n_electrons} exceeds the"
            f" {len(lattice.active_sites)} non-vacant lattice sites"
        )

    return RunConfig(
        lattice=lattice, grid=grid, n_electrons=n_electrons, n_walkers=n_walkers,
        seed=seed, init_width=init_width, step_params=step_params,
        max_steps=max_steps, energy_tol=energy_tol, record_interval=record_interval,
        sigma_value=sigma_value, sigma_candidates=sigma_candidates,
        candidate_walkers=candidate_walkers, candidate_steps=candidate_steps,
        n_zones=n_zones, oracle_samples=oracle_samples,
        oracle_max_steps=oracle_max_steps, oracle_tol=oracle_tol,
        oracle_budget=oracle_budget, out_dir=out_dir, artifacts=artifacts,
        raw=mapping,
    )
