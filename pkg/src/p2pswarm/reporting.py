"""CSV and key-value writers with fixed column schemas.

Numbers are formatted deterministically so that two runs with the same seed
produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .simulator import Trajectory


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def trajectory_header(K: int, coded: bool = False) -> list[str]:
    stem = "dim" if coded else "n"
    return ["t", "total"] + [f"{stem}_{i}" for i in range(K)]


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """``t,total,n_0..n_{K-1}``; coded runs use ``dim_`` columns instead."""
    coded = traj.holders is None
    rows = (
        [t, tot, *n]
        for t, tot, n in zip(traj.times.tolist(), traj.total.tolist(), traj.n.tolist())
    )
    return write_rows(path, trajectory_header(traj.K, coded), rows)


def write_profile_csv(profile: Sequence[float], path: str | Path) -> Path:
    """``piece,avg_holders`` with 1-based piece labels."""
    return write_rows(path, ["piece", "avg_holders"], ([j + 1, float(v)] for j, v in enumerate(profile)))


def write_departures_csv(traj: Trajectory, path: str | Path) -> Path:
    return write_rows(path, ["t_depart", "sojourn"], traj.departures.tolist())


def write_keyvalue(values: Mapping[str, object], path: str | Path) -> Path:
    """Flat ``key = value`` text, one entry per line, in insertion order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k} = {fmt(v)}\n" for k, v in values.items()))
    return path


def read_keyvalue(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            k, _, v = line.partition(" = ")
            out[k] = v
    return out


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
