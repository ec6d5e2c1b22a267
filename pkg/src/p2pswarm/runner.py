"""Execute a manifest: replicas on independent streams, CSV artifacts and a summary report."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis.instability import alt_system_simulate, instability_constants
from .analysis.reduced import mu_infinity_simulate
from .coding import CodedConfig, coded_one_club, nc_simulate
from .core import SwarmState
from .errors import ResourceCapError
from .manifest import ExperimentManifest
from .reporting import (
    fmt,
    write_departures_csv,
    write_keyvalue,
    write_profile_csv,
    write_rows,
    write_trajectory_csv,
)
from .simulator import (
    SimConfig,
    piece_presence_profile,
    rare_piece_signature,
    simulate,
    slope_estimate,
    time_average,
)


@dataclass
class RunReport:
    """Per-replica rows plus column means and standard errors (sample SD / sqrt(replicas))."""

    name: str
    engine: str
    lam: float
    window: tuple[float, float]
    columns: list[str]
    rows: list[dict] = field(default_factory=list)

    def column(self, key: str) -> np.ndarray:
        return np.array([float(r[key]) for r in self.rows])

    @property
    def numeric(self) -> list[str]:
        return [c for c in self.columns if c not in ("replica", "lambda")]

    def mean(self, key: str) -> float:
        return float(self.column(key).mean())

    def se(self, key: str) -> float:
        v = self.column(key)
        return float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan

    def summary(self) -> dict:
        out = {
            "name": self.name,
            "engine": self.engine,
            "lambda": self.lam,
            "replicas": len(self.rows),
            "window_t0": self.window[0],
            "window_t1": self.window[1],
        }
        for c in self.numeric:
            out[f"mean_{c}"] = self.mean(c)
            out[f"se_{c}"] = self.se(c)
        return out


PIECE_COLUMNS = ["replica", "lambda", "time_avg", "slope", "rare_piece", "min_holders", "max_holders", "rare_signature", "events"]
CODED_COLUMNS = ["replica", "lambda", "time_avg", "slope", "departures", "seed_departures", "events"]
MUINF_COLUMNS = ["replica", "lambda", "time_avg", "top_fraction", "final_n"]
ALT_COLUMNS = ["replica", "lambda", "launch_success", "all_four", "final_N", "slope_N"]


def _grid_sample(times: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    k = np.searchsorted(times, grid, side="right") - 1
    return values[k]


def _job(args):
    """One replica; returns ``(summary_row, artifacts)``.  Module-level so it pickles."""
    m, lam, r, seed = args
    p = m.params(lam)
    window = m.effective_window
    try:
        if m.engine == "piece":
            init = SwarmState.one_club(p.K, m.initial_size) if m.initial == "one-club" else None
            cfg = SimConfig(p, m.policy, m.horizon, init, seed, m.sample_dt, m.max_peers)
            tr = simulate(cfg)
            prof, _ = piece_presence_profile(tr)
            sig = rare_piece_signature(prof)
            row = dict(
                replica=r, time_avg=time_average(tr, window), slope=slope_estimate(tr, window),
                rare_piece=sig["rare_piece"], min_holders=float(prof.min()), max_holders=float(prof.max()),
                rare_signature=sig["ok"], events=tr.events,
            )
            return row, {"traj": tr, "profile": prof}
        if m.engine == "coded":
            init = coded_one_club(m.q, p.K, m.initial_size) if m.initial == "one-club" else None
            cfg = CodedConfig(SimConfig(p, "random-useful", m.horizon, None, seed, m.sample_dt, m.max_peers), m.q, init)
            tr = nc_simulate(cfg)
            row = dict(
                replica=r, time_avg=time_average(tr, window), slope=slope_estimate(tr, window),
                departures=len(tr.departures), seed_departures=tr.final_state["seed_departures"], events=tr.events,
            )
            return row, {"traj": tr}
        if m.engine == "mu-infinity":
            rt = mu_infinity_simulate(p.lam, p.Us, p.K, m.horizon, np.random.default_rng(seed))
            grid = np.arange(int(math.floor(m.horizon / m.sample_dt + 1e-9)) + 1) * m.sample_dt
            row = dict(replica=r, time_avg=rt.time_average_n(), top_fraction=rt.top_layer_fraction(), final_n=int(rt.n[-1]))
            return row, {"grid": (grid, _grid_sample(rt.times, rt.n, grid), _grid_sample(rt.times, rt.k, grid))}
        consts = instability_constants(p)
        size = m.initial_size if m.initial == "one-club" else None
        res = alt_system_simulate(p, consts, m.horizon, np.random.default_rng(seed), m.sample_dt, size)
        slope = float(np.polyfit(res.times, res.N, 1)[0]) if res.times.size > 1 else math.nan
        row = dict(replica=r, launch_success=res.launch_success, all_four=res.all_four, final_N=int(res.N[-1]), slope_N=slope)
        return row, {"alt": res}
    except ResourceCapError as e:
        raise ResourceCapError(f"replica {r} (lambda={lam}): {e}", e.population) from None


def _write_artifacts(out: Path, r: int, art: dict) -> None:
    tag = f"r{r:03d}"
    if "traj" in art:
        write_trajectory_csv(art["traj"], out / f"traj_{tag}.csv")
        write_departures_csv(art["traj"], out / f"departures_{tag}.csv")
    if "profile" in art:
        write_profile_csv(art["profile"], out / f"profile_{tag}.csv")
    if "grid" in art:
        g, n, k = art["grid"]
        write_rows(out / f"traj_{tag}.csv", ["t", "n", "k"], zip(g.tolist(), n.tolist(), k.tolist()))
    if "alt" in art:
        a = art["alt"]
        write_rows(
            out / f"traj_{tag}.csv",
            ["t", "N", "Y", "D", "Z", "A"],
            zip(a.times.tolist(), a.N.tolist(), a.Y.tolist(), a.D.tolist(), a.Z.tolist(), a.A.tolist()),
        )
        write_keyvalue(a.flags, out / f"flags_{tag}.txt")


def run_manifest(m: ExperimentManifest, workers: int = 1, write: bool = True, out_dir: Path | None = None) -> list[RunReport]:
    """Run every ``lambda`` of ``m``; one :class:`RunReport` per value.

    Replica ``r`` of the ``j``-th lambda uses child ``r`` of child ``j`` of
    ``SeedSequence(rng_seed)``, so results do not depend on scheduling.
    """
    cols = {"piece": PIECE_COLUMNS, "coded": CODED_COLUMNS, "mu-infinity": MUINF_COLUMNS, "alt-system": ALT_COLUMNS}[m.engine]
    base = np.random.SeedSequence(m.rng_seed).spawn(len(m.lambdas))
    root = Path(out_dir) if out_dir is not None else m.output_dir()
    reports = []
    for lam, ss in zip(m.lambdas, base):
        jobs = [(m, lam, r, s) for r, s in enumerate(ss.spawn(m.replicas))]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_job, jobs))
        else:
            results = [_job(j) for j in jobs]
        rep = RunReport(m.name, m.engine, lam, m.effective_window, cols)
        out = root / f"lambda_{fmt(lam)}"
        for r, (row, art) in enumerate(results):
            row["lambda"] = lam
            rep.rows.append(row)
            if write:
                _write_artifacts(out, r, art)
        if write:
            write_rows(out / "replicas.csv", cols, ([row[c] for c in cols] for row in rep.rows))
            write_keyvalue(rep.summary(), out / "summary.txt")
        reports.append(rep)
    return reports
