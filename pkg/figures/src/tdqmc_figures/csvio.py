"""Readers for the documented CSV contract.

Two schemas are accepted:
  profiles:  header `x,value`, one float pair per row
  zone maps: header `zone_x,zone_y,value,walker_count`, row-major zones,
             empty zones carry value nan and count 0

Anything else is a schema mismatch. These readers deliberately share no code
with the simulation package; the CSV files are the interface.
"""

from __future__ import annotations

import csv

import numpy as np

PROFILE_HEADER = ["x", "value"]
MAP_HEADER = ["zone_x", "zone_y", "value", "walker_count"]


class SchemaError(ValueError):
    """Input file does not match the documented CSV contract."""


def _read_rows(path: str, expected_header: list[str]) -> list[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if [h.strip() for h in header] != expected_header:
            raise SchemaError(
                f"{path}: expected header {','.join(expected_header)},"
                f" found {','.join(header)}"
            )
        return [row for row in reader if row]


def read_profile_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path, PROFILE_HEADER)
    try:
        data = np.array([[float(c) for c in row] for row in rows])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric profile row ({exc})") from None
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] == 0:
        raise SchemaError(f"{path}: malformed profile body")
    return data[:, 0], data[:, 1]


def read_map_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Returns (values, counts) as (nx, ny) arrays; empty zones are nan/0."""
    rows = _read_rows(path, MAP_HEADER)
    try:
        zx = np.array([int(r[0]) for r in rows])
        zy = np.array([int(r[1]) for r in rows])
        vals = np.array([float(r[2]) for r in rows])
        counts = np.array([int(r[3]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: malformed map row ({exc})") from None
    if len(rows) == 0:
        raise SchemaError(f"{path}: map has no zones")
    nx, ny = zx.max() + 1, zy.max() + 1
    if len(rows) != nx * ny:
        raise SchemaError(f"{path}: expected {nx * ny} zone rows, found {len(rows)}")
    values = np.full((nx, ny), np.nan)
    count_grid = np.zeros((nx, ny), dtype=np.int64)
    values[zx, zy] = vals
    count_grid[zx, zy] = counts
    return values, count_grid
