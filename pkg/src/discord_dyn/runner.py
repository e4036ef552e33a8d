"""Scenario execution, sweeps and figure-data emission.

Every run produces a CSV with columns ``omega_a_t, discord, trace_error,
min_eigenvalue, purity`` (17 significant digits, LF line endings) and a JSON
manifest written only after the CSV is complete.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import __version__
from .config import ConfigError, RunConfig, config_with
from .liouville import ReservoirKind
from .presets import FAMILIES, family_panels, preset_configs
from .propagator import (
    NegativityWarning,
    RiccatiBlowupError,
    Trajectory,
    propagate_numerical,
    solve_independent_analytic,
)

__all__ = [
    "CSV_COLUMNS",
    "SWEEP_CAP",
    "ScenarioResult",
    "SweepResult",
    "simulate",
    "time_to_half",
    "format_csv",
    "write_atomic",
    "run_scenario",
    "run_preset",
    "run_sweep",
    "emit_figure_data",
    "worker_count",
]

CSV_COLUMNS = ("omega_a_t", "discord", "trace_error", "min_eigenvalue", "purity")
SWEEP_CAP = 256
AXIS_ALIASES = {"kind": "reservoir_kind"}


def worker_count(requested: Optional[int] = None) -> int:
    """Pool size: explicit request, else ``DISCORD_DYN_THREADS``, else CPU count."""
    if requested is not None:
        n = int(requested)
    elif os.environ.get("DISCORD_DYN_THREADS"):
        try:
            n = int(os.environ["DISCORD_DYN_THREADS"])
        except ValueError:
            raise ConfigError("DISCORD_DYN_THREADS must be an integer") from None
    else:
        n = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    if n < 1:
        raise ConfigError("worker count must be at least 1")
    return n


def time_to_half(times, discord) -> float:
    """First time the discord falls to half its initial value.

    The crossing is located on a cubic spline through the six grid points
    around it.  Returns ``inf`` if it never happens and ``nan`` when the
    initial discord is zero.
    """
    times = np.asarray(times, dtype=float)
    d = np.asarray(discord, dtype=float)
    if not d[0] > 0:
        return math.nan
    target = 0.5 * d[0]
    below = np.flatnonzero(d <= target)
    if below.size == 0:
        return math.inf
    k = below[0]
    lo, hi = max(k - 3, 0), min(k + 3, d.size)
    if hi - lo < 4:
        d0, d1 = d[k - 1], d[k]
        return float(times[k - 1] + (times[k] - times[k - 1]) * (d0 - target) / (d0 - d1))
    spline = CubicSpline(times[lo:hi], d[lo:hi] - target)
    return float(brentq(spline, times[k - 1], times[k], xtol=1e-14))


def simulate(cfg: RunConfig) -> tuple[Trajectory, dict]:
    """Propagate and score one configuration.

    Returns the trajectory (with discord filled in) and a diagnostics dict.
    For independent reservoirs the diagnostics include the largest population
    deviation of the factorized solution, using ``cfg.prefactor_switch``.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NegativityWarning)
        traj = propagate_numerical(
            cfg.rho0(), cfg.reservoir_kind, cfg.spectral_params, cfg.regime, cfg.t_end, cfg.n_steps
        )
    traj.with_discord(grid=cfg.discord_grid, measured=cfg.measured_qubit)
    diag = {
        "max_trace_error": float(traj.trace_error.max()),
        "max_hermiticity_defect": float(traj.hermiticity_defect.max()),
        "min_eigenvalue": float(traj.min_eigenvalue.min()),
        "warnings": [str(w.message) for w in caught],
    }
    if cfg.reservoir_kind is ReservoirKind.INDEPENDENT:
        try:
            analytic = solve_independent_analytic(
                cfg.rho0(), cfg.spectral_params, cfg.regime, traj.times, prefactor=cfg.prefactor_switch
            )
        except RiccatiBlowupError as exc:
            # the factorized form is ill-conditioned at large rates; the numerical run stands
            diag["analytic_population_deviation"] = None
            diag["analytic_error"] = str(exc)
        else:
            pops_num = np.einsum("nii->ni", traj.states).real
            pops_ana = np.einsum("nii->ni", analytic.states).real
            diag["analytic_population_deviation"] = float(np.abs(pops_num - pops_ana).max())
    return traj, diag


def _columns(traj: Trajectory) -> list[np.ndarray]:
    return [traj.times, traj.discord, traj.trace_error, traj.min_eigenvalue, traj.purity]


def format_csv(traj: Trajectory) -> tuple[str, dict]:
    """CSV text plus per-column SHA-256 checksums of the formatted values."""
    cols = [[f"{x:.17g}" for x in c.tolist()] for c in _columns(traj)]
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(row) for row in zip(*cols))
    checksums = {
        name: hashlib.sha256("\n".join(c).encode()).hexdigest() for name, c in zip(CSV_COLUMNS, cols)
    }
    return "\n".join(lines) + "\n", checksums


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass
class ScenarioResult:
    config: RunConfig
    trajectory: Trajectory
    csv_path: Path
    manifest_path: Path
    diagnostics: dict = field(default_factory=dict)

    @property
    def terminal_discord(self) -> float:
        return float(self.trajectory.discord[-1])

    @property
    def time_to_half(self) -> float:
        return time_to_half(self.trajectory.times, self.trajectory.discord)


def run_scenario(cfg: RunConfig) -> ScenarioResult:
    """Run one configuration and persist ``trajectory.csv`` and ``manifest.json``
    into ``cfg.output_dir``."""
    start = time.perf_counter()
    traj, diag = simulate(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    text, checksums = format_csv(traj)
    csv_path = out / "trajectory.csv"
    write_atomic(csv_path, text)
    manifest = {
        "config": cfg.as_dict(),
        "version": __version__,
        "wall_seconds": time.perf_counter() - start,
        "rows": len(traj),
        "columns": list(CSV_COLUMNS),
        "checksums": checksums,
        "diagnostics": diag,
    }
    manifest_path = out / "manifest.json"
    write_atomic(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ScenarioResult(cfg, traj, csv_path, manifest_path, diag)


def run_preset(name: str, out_dir, *, long_time: bool = False, **overrides) -> dict[str, ScenarioResult]:
    """Run every spectrum of a figure panel such as ``fig1f``."""
    configs = preset_configs(name, long_time=long_time, output_dir=str(out_dir), **overrides)
    return {label: run_scenario(cfg) for label, cfg in configs.items()}


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    rows: list[dict]
    summary_path: Path

    @property
    def failed(self) -> list[dict]:
        return [r for r in self.rows if r["status"] != "ok"]


def _sweep_point(cfg: RunConfig) -> dict:
    try:
        res = run_scenario(cfg)
    except Exception as exc:  # reported per point, the sweep carries on
        return {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    return {
        "status": "ok",
        "error": "",
        "terminal_discord": res.terminal_discord,
        "time_to_half_discord": res.time_to_half,
    }


def _map(func, items, workers: int):
    if workers == 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


def _expand_axes(base: RunConfig, axes: dict, root: Path, cap: int):
    keys = [AXIS_ALIASES.get(k, k) for k in axes]
    if len(set(keys)) != len(keys):
        raise ConfigError("duplicate sweep axis")
    values = [list(v) for v in axes.values()]
    if any(len(v) == 0 for v in values):
        raise ConfigError("sweep axis with no values")
    total = math.prod(len(v) for v in values)
    if total > cap:
        raise ConfigError(f"sweep has {total} points, above the cap of {cap}")
    points = []
    for i, combo in enumerate(itertools.product(*values)):
        label = "_".join(f"{k}={v}" for k, v in zip(keys, combo))
        run_dir = root / (f"point_{i:03d}" + (f"_{label}" if label else ""))
        cfg = config_with(base, **dict(zip(keys, combo)), output_dir=str(run_dir))
        points.append((dict(zip(keys, (str(v) for v in combo))), cfg))
    return keys, points


def run_sweep(base: RunConfig, axes: dict, out_dir=None, *, cap: int = SWEEP_CAP,
              workers: Optional[int] = None) -> SweepResult:
    """Cartesian sweep around ``base``.

    ``axes`` maps config keys (``kind`` is accepted for ``reservoir_kind``) to
    value lists.  Each point runs in its own directory under ``out_dir``
    (default ``base.output_dir``); ``summary.csv`` gathers terminal discord
    and time-to-half-discord.  Failed points are listed, not fatal.
    """
    root = Path(out_dir if out_dir is not None else base.output_dir)
    keys, points = _expand_axes(base, axes, root, cap)
    root.mkdir(parents=True, exist_ok=True)
    outcomes = _map(_sweep_point, [cfg for _, cfg in points], worker_count(workers))

    rows = []
    for i, ((params, cfg), outcome) in enumerate(zip(points, outcomes)):
        row = {"point": i, **params, "output_dir": cfg.output_dir}
        row["terminal_discord"] = outcome.get("terminal_discord", math.nan)
        row["time_to_half_discord"] = outcome.get("time_to_half_discord", math.nan)
        row["status"] = outcome["status"]
        row["error"] = outcome["error"]
        rows.append(row)

    header = ["point", *keys, "output_dir", "terminal_discord", "time_to_half_discord", "status", "error"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{row[h]:.17g}" if isinstance(row[h], float) else row[h] for h in header])
    summary = root / "summary.csv"
    write_atomic(summary, buf.getvalue())
    return SweepResult(rows, summary)


# ---------------------------------------------------------------------------
# figure data


def _figure_series(cfg: RunConfig) -> str:
    traj, _ = simulate(cfg)
    return format_csv(traj)[0]


def emit_figure_data(family: str, out_dir, *, long_time: bool = False, t_end: Optional[float] = None,
                     n_steps: Optional[int] = None, discord_grid: int = 64,
                     workers: Optional[int] = None) -> Path:
    """Write one CSV per (panel, spectrum) series plus ``layout.json``.

    Files are named ``<panel>_<spectrum>.csv`` (``_long`` appended for the
    long-time grid).  ``layout.json`` lists, per panel, its parameters and the
    series files with their exponent, so a plotting tool can rebuild the
    figure grid (panels ``a``-``c`` on the top row, ``d``-``f`` below).
    """
    if family not in FAMILIES:
        raise ConfigError(f"unknown figure family {family!r}; expected one of {FAMILIES}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs, layout = [], {"family": family, "version": __version__, "columns": list(CSV_COLUMNS),
                        "rows_of_panels": [["a", "b", "c"], ["d", "e", "f"]], "panels": []}
    for p in family_panels(family):
        configs = preset_configs(p.name, long_time=long_time, output_dir=str(out), t_end=t_end,
                                 n_steps=n_steps, discord_grid=discord_grid)
        entry = {**p.describe(), "series": []}
        for label, cfg in configs.items():
            fname = Path(cfg.output_dir).name + ".csv"
            entry["series"].append({"spectrum": label, "s": cfg.s, "file": fname,
                                    "t_end": cfg.t_end, "n_steps": cfg.n_steps})
            jobs.append((fname, cfg))
        layout["panels"].append(entry)

    texts = _map(_figure_series, [cfg for _, cfg in jobs], worker_count(workers))
    for (fname, _), text in zip(jobs, texts):
        write_atomic(out / fname, text)
    layout_name = "layout_long.json" if long_time else "layout.json"
    write_atomic(out / layout_name, json.dumps(layout, indent=2) + "\n")
    return out
