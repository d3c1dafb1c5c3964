"""Run orchestration and bit-exact artifact export.

All delimited output uses 17-significant-digit serialization so re-reading a
file reproduces every float exactly; empty zones serialize as value nan with
walker count 0. Each run writes a schema-versioned manifest holding the full
resolved configuration, the seed actually used, timings and the convergence
report; replaying a manifest regenerates byte-identical CSV artifacts.
"""

from __future__ import annotations

import json
import math
import os
import time

import numpy as np

from .config import RunConfig, config_from_mapping
from .ensemble import init_ensemble, optimize_sigma, relax, total_energy
from .errors import ConfigError
from .grid import Field
from .oracle import (exact_ground_state_1p, exact_ground_state_2p, exact_local_entropy_map,
                     exact_rdm, one_body_density)
from .potentials import sample_on_grid
from .quantum_info import (EntropyMap, coherence_map, linear_entropy, local_entropy_map,
                           make_partition, purity)

__all__ = [
    "run", "run_oracle", "run_sweep", "replay_manifest",
    "export_profile", "export_map", "export_nodes",
    "read_profile", "read_map", "compare_profiles", "compare_maps", "compare_files",
]

MANIFEST_SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def export_profile(xs, ys, path: str) -> None:
    """CSV profile `x,value`, one row per sample, 17 significant digits."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("profile coordinate and value arrays differ in length")
    lines = ["x,value"]
    lines += [f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys)]
    _write_lines(path, lines)


def export_nodes(field: Field, path: str) -> None:
    """CSV node map `x,y,value` for 2D grid fields."""
    grid = field.grid
    nodes = grid.node_positions()
    values = np.real(field.values).ravel()
    lines = ["x,y,value"]
    lines += [f"{_fmt(p[0])},{_fmt(p[1])},{_fmt(v)}" for p, v in zip(nodes, values)]
    _write_lines(path, lines)


def export_map(emap: EntropyMap, path: str) -> None:
    """CSV zone map `zone_x,zone_y,value,walker_count`; empty zones are nan."""
    values = np.atleast_2d(emap.values if emap.values.ndim == 2 else emap.values[:, None])
    counts = np.atleast_2d(emap.walker_counts if emap.walker_counts.ndim == 2
                           else emap.walker_counts[:, None])
    lines = ["zone_x,zone_y,value,walker_count"]
    for ix in range(values.shape[0]):
        for iy in range(values.shape[1]):
            lines.append(f"{ix},{iy},{_fmt(values[ix, iy])},{int(counts[ix, iy])}")
    _write_lines(path, lines)


def read_profile(path: str):
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    return data[:, 0], data[:, 1]


def read_map(path: str):
    """Return (values, counts) 2D arrays from a zone-map CSV."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    nx = int(data[:, 0].max()) + 1
    ny = int(data[:, 1].max()) + 1
    values = np.full((nx, ny), np.nan)
    counts = np.zeros((nx, ny), dtype=np.int64)
    for row in data:
        values[int(row[0]), int(row[1])] = row[2]
        counts[int(row[0]), int(row[1])] = int(row[3])
    return values, counts


def _header_of(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.readline().strip()


def compare_profiles(a_path: str, b_path: str) -> dict:
    xa, ya = read_profile(a_path)
    xb, yb = read_profile(b_path)
    if xa.shape != xb.shape or np.max(np.abs(xa - xb)) > 1e-9:
        raise ConfigError("profiles are sampled on different coordinates")
    diff = ya - yb
    ref = float(np.linalg.norm(yb))
    return {
        "l2_relative_error": float(np.linalg.norm(diff)) / ref if ref > 0 else math.inf,
        "linf_error": float(np.max(np.abs(diff))),
        "mean_abs_error": float(np.mean(np.abs(diff))),
        "n_points": int(xa.size),
    }


def compare_maps(a_path: str, b_path: str) -> dict:
    va, ca = read_map(a_path)
    vb, cb = read_map(b_path)
    if va.shape != vb.shape:
        raise ConfigError("zone maps have different shapes")
    both = (ca > 0) & (cb > 0)
    out = {"n_zones": int(va.size), "n_common_zones": int(both.sum())}
    if both.sum() >= 2:
        x, y = va[both], vb[both]
        sx, sy = np.std(x), np.std(y)
        if sx > 0 and sy > 0:
            out["pearson"] = float(np.corrcoef(x, y)[0, 1])
        else:
            out["pearson"] = float("nan")
        out["mean_abs_diff"] = float(np.mean(np.abs(x - y)))
    return out


def compare_files(a_path: str, b_path: str) -> dict:
    header = _header_of(a_path)
    if _header_of(b_path) != header:
        raise ConfigError("cannot compare artifacts with different schemas")
    if header == "zone_x,zone_y,value,walker_count":
        return compare_maps(a_path, b_path)
    if header in ("x,value", "x,y,value"):
        return compare_profiles(a_path, b_path) if header == "x,value" \
            else _compare_nodes(a_path, b_path)
    raise ConfigError(f"unrecognized artifact header '{header}'")


def _compare_nodes(a_path: str, b_path: str) -> dict:
    da = np.atleast_2d(np.genfromtxt(a_path, delimiter=",", skip_header=1))
    db = np.atleast_2d(np.genfromtxt(b_path, delimiter=",", skip_header=1))
    if da.shape != db.shape or np.max(np.abs(da[:, :2] - db[:, :2])) > 1e-9:
        raise ConfigError("node maps are sampled on different coordinates")
    diff = da[:, 2] - db[:, 2]
    ref = float(np.linalg.norm(db[:, 2]))
    return {
        "l2_relative_error": float(np.linalg.norm(diff)) / ref if ref > 0 else math.inf,
        "linf_error": float(np.max(np.abs(diff))),
        "n_points": int(da.shape[0]),
    }


def _measures(state, cfg: RunConfig, sigma_used) -> dict:
    partition = make_partition(state.grid, cfg.n_zones)
    ent_map = local_entropy_map(state, partition)
    coh_map = coherence_map(state, partition)
    purities = [purity(state.waves[i], state.grid) for i in range(state.n_electrons)]
    entropies = [1.0 - p for p in purities]
    energy = total_energy(state, cfg.lattice, state.grid)
    return {
        "entropy_map": ent_map,
        "coherence_map": coh_map,
        "partition": partition,
        "purity_mean": float(np.mean(purities)),
        "purity_per_electron": purities,
        "linear_entropy_mean": float(np.mean(entropies)),
        "energy": energy,
        "sigma_used": sigma_used,
    }


def _export_run_artifacts(state, cfg: RunConfig, meas: dict, out_dir: str) -> list:
    grid = state.grid
    written = []

    def want(name: str) -> bool:
        return name in cfg.artifacts

    def emit(name, fn):
        path = os.path.join(out_dir, name)
        fn(path)
        written.append(name)

    v_en = sample_on_grid(cfg.lattice, grid)
    density = state.one_body_density()
    if grid.dim == 1:
        xs = grid.axis_coordinates()
        if want("potential"):
            emit("potential.csv", lambda p: export_profile(xs, v_en.values, p))
        if want("density"):
            emit("density.csv", lambda p: export_profile(xs, density.values, p))
    else:
        if want("potential"):
            emit("potential_nodes.csv", lambda p: export_nodes(v_en, p))
        if want("density"):
            emit("density_nodes.csv", lambda p: export_nodes(density, p))
    if want("entropy_map"):
        emit("entropy_map.csv", lambda p: export_map(meas["entropy_map"], p))
    if want("coherence_map"):
        emit("coherence_map.csv", lambda p: export_map(meas["coherence_map"], p))
    if grid.dim == 1:
        centers = meas["partition"].zone_centers()
        if want("entropy_profile"):
            emit("entropy_profile.csv",
                 lambda p: export_profile(centers, meas["entropy_map"].values, p))
        if want("coherence_profile"):
            emit("coherence_profile.csv",
                 lambda p: export_profile(centers, meas["coherence_map"].values, p))
    if want("summary"):
        sigma_used = meas["sigma_used"]
        rows = [
            ("energy", meas["energy"]),
            ("purity", meas["purity_mean"]),
            ("linear_entropy", meas["linear_entropy_mean"]),
            ("sigma", sigma_used),
            ("n_electrons", state.n_electrons),
            ("n_walkers", state.n_walkers),
        ]
        lines = ["name,value"] + [f"{k},{_fmt(v)}" for k, v in rows]
        emit("summary.csv", lambda p: _write_lines(p, lines))
    return written


def _write_manifest(out_dir: str, cfg: RunConfig, command: str, seed: int,
                    timings: dict, extra: dict, artifacts: list) -> None:
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config": cfg.raw,
        "timings_seconds": timings,
        "artifacts": artifacts,
    }
    manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _apply_seed(cfg: RunConfig, seed_override: int | None) -> tuple[RunConfig, int]:
    seed = cfg.seed if seed_override is None else int(seed_override)
    if seed_override is not None:
        raw = {sec: dict(keys) for sec, keys in cfg.raw.items()}
        raw.setdefault("ensemble", {})["seed"] = str(seed)
        cfg = config_from_mapping(raw)
    return cfg, seed


def run(cfg: RunConfig, out_dir: str | None = None,
        seed_override: int | None = None) -> dict:
    """Full pipeline: init, optional sigma scan, relax, measure, export."""
    cfg, seed = _apply_seed(cfg, seed_override)
    out_dir = cfg.out_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    timings = {}
    t0 = time.perf_counter()

    sigma_used = cfg.sigma_value
    sweep_artifacts = []
    if cfg.sigma_candidates is not None:
        t = time.perf_counter()
        sigma_used, curve = optimize_sigma(
            cfg.lattice, cfg.grid, cfg.n_electrons, cfg.candidate_walkers,
            cfg.sigma_candidates, seed=seed, step_params=cfg.step_params,
            max_steps=cfg.candidate_steps, energy_tol=cfg.energy_tol,
            init_width=cfg.init_width)
        timings["sigma_scan"] = time.perf_counter() - t
        path = os.path.join(out_dir, "sigma_curve.csv")
        _write_lines(path, ["sigma,energy"]
                     + [f"{_fmt(s)},{_fmt(e)}" for s, e in curve])
        sweep_artifacts.append("sigma_curve.csv")

    state = init_ensemble(cfg.lattice, cfg.grid, cfg.n_electrons, cfg.n_walkers,
                          sigma_used, seed=seed, init_width=cfg.init_width)
    t = time.perf_counter()
    state, report = relax(state, cfg.lattice, cfg.grid, cfg.step_params,
                          max_steps=cfg.max_steps, energy_tol=cfg.energy_tol,
                          record_interval=cfg.record_interval)
    timings["relax"] = time.perf_counter() - t

    t = time.perf_counter()
    meas = _measures(state, cfg, sigma_used)
    timings["measures"] = time.perf_counter() - t

    artifacts = sweep_artifacts + _export_run_artifacts(state, cfg, meas, out_dir)
    timings["total"] = time.perf_counter() - t0
    extra = {
        "convergence": {
            "steps_taken": report.steps_taken,
            "converged": bool(report.converged),
            "final_energy": report.final_energy,
        },
        "measures": {
            "energy": meas["energy"],
            "purity": meas["purity_mean"],
            "linear_entropy": meas["linear_entropy_mean"],
            "sigma_used": sigma_used,
        },
    }
    _write_manifest(out_dir, cfg, "run", seed, timings, extra, artifacts)
    return {"state": state, "report": report, "measures": meas, "out_dir": out_dir,
            "sigma_used": sigma_used}


def run_oracle(cfg: RunConfig, out_dir: str | None = None,
               seed_override: int | None = None) -> dict:
    """Exact baselines on the configured system (one or two electrons)."""
    cfg, seed = _apply_seed(cfg, seed_override)
    out_dir = cfg.out_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    timings = {}
    t0 = time.perf_counter()
    grid = cfg.grid
    artifacts = []
    summary_rows = []

    if cfg.n_electrons == 1:
        wave, energy = exact_ground_state_1p(sample_on_grid(cfg.lattice, grid))
        density = Field(grid, np.abs(wave.values) ** 2)
        summary_rows += [("energy", energy), ("linear_entropy", 0.0), ("purity", 1.0)]
        emap = None
    elif cfg.n_electrons == 2:
        psi = exact_ground_state_2p(cfg.lattice, grid, dtau=cfg.step_params.dtau,
                                    max_steps=cfg.oracle_max_steps, tol=cfg.oracle_tol,
                                    budget=cfg.oracle_budget, init_width=cfg.init_width)
        density = one_body_density(psi)
        rdm = exact_rdm(psi)
        pur = rdm.purity()
        summary_rows += [("energy", psi.energy), ("linear_entropy", 1.0 - pur),
                         ("purity", pur), ("converged", float(psi.converged))]
        partition = make_partition(grid, cfg.n_zones)
        emap = exact_local_entropy_map(psi, partition, cfg.oracle_samples, seed=seed)
    else:
        raise ConfigError("the exact solver supports one or two electrons only")
    timings["solve"] = time.perf_counter() - t0

    if grid.dim == 1:
        xs = grid.axis_coordinates()
        export_profile(xs, density.values, os.path.join(out_dir, "oracle_density.csv"))
        artifacts.append("oracle_density.csv")
    else:
        export_nodes(density, os.path.join(out_dir, "oracle_density_nodes.csv"))
        artifacts.append("oracle_density_nodes.csv")
    if emap is not None:
        export_map(emap, os.path.join(out_dir, "oracle_entropy_map.csv"))
        artifacts.append("oracle_entropy_map.csv")
        if grid.dim == 1:
            centers = make_partition(grid, cfg.n_zones).zone_centers()
            export_profile(centers, emap.values,
                           os.path.join(out_dir, "oracle_entropy_profile.csv"))
            artifacts.append("oracle_entropy_profile.csv")
    lines = ["name,value"] + [f"{k},{_fmt(v)}" for k, v in summary_rows]
    _write_lines(os.path.join(out_dir, "oracle_summary.csv"), lines)
    artifacts.append("oracle_summary.csv")
    timings["total"] = time.perf_counter() - t0
    _write_manifest(out_dir, cfg, "oracle", seed, timings, {}, artifacts)
    return {"out_dir": out_dir, "artifacts": artifacts}


def run_sweep(cfg: RunConfig, out_dir: str | None = None,
              seed_override: int | None = None) -> dict:
    """Sigma scan only: writes the energy curve and the selected value."""
    cfg, seed = _apply_seed(cfg, seed_override)
    if cfg.sigma_candidates is None:
        raise ConfigError("sweep-sigma requires 'candidates' in the [sigma] section")
    out_dir = cfg.out_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    sigma_best, curve = optimize_sigma(
        cfg.lattice, cfg.grid, cfg.n_electrons, cfg.candidate_walkers,
        cfg.sigma_candidates, seed=seed, step_params=cfg.step_params,
        max_steps=cfg.candidate_steps, energy_tol=cfg.energy_tol,
        init_width=cfg.init_width)
    _write_lines(os.path.join(out_dir, "sigma_curve.csv"),
                 ["sigma,energy"] + [f"{_fmt(s)},{_fmt(e)}" for s, e in curve])
    _write_lines(os.path.join(out_dir, "sigma_best.csv"),
                 ["name,value", f"sigma_best,{_fmt(sigma_best)}"])
    timings = {"total": time.perf_counter() - t0}
    _write_manifest(out_dir, cfg, "sweep-sigma", seed, timings,
                    {"sigma_best": sigma_best},
                    ["sigma_curve.csv", "sigma_best.csv"])
    return {"sigma_best": sigma_best, "curve": curve, "out_dir": out_dir}


def replay_manifest(path: str, out_dir: str | None = None) -> dict:
    """Re-run the command recorded in a manifest from its stored config."""
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported manifest schema {manifest.get('schema_version')!r}")
    cfg = config_from_mapping(manifest["config"])
    command = manifest.get("command", "run")
    if command == "run":
        return run(cfg, out_dir=out_dir)
    if command == "oracle":
        return run_oracle(cfg, out_dir=out_dir)
    if command == "sweep-sigma":
        return run_sweep(cfg, out_dir=out_dir)
    raise ConfigError(f"manifest records unknown command '{command}'")
