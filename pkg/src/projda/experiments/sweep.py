"""Parameter sweeps over trials, with deterministic aggregation and CSV output.

A sweep is the cartesian product of the configured axes, iterated with
scenario outermost, then forcing, Q scale, r_p, and r_d innermost. Results
are keyed by (point, trial), so the summary is identical for any worker
count.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, replace
from .metrics import MetricsRecord
from .trial import run_trial

logger = logging.getLogger("projda.experiments")


@dataclass(frozen=True)
class SummaryRow:
    r_p: int
    r_d: int
    forcing: float
    scenario: str
    q_scale: float
    mean_rmse: float
    std_rmse: float
    mean_rmse_proj: float
    resamp_pct: float
    failed_trials: int


def sweep_points(config: ExperimentConfig) -> list[ExperimentConfig]:
    """Expand the sweep axes; an axis left empty stays at its config value."""
    points = []
    for scenario in config.sweep_scenario or (config.scenario,):
        for forcing in config.sweep_forcing or (config.forcing,):
            for q_scale in config.sweep_q_scale or (config.q_scale,):
                for r_p in config.sweep_r_p or (config.r_p,):
                    for r_d in config.sweep_r_d or (config.r_d,):
                        points.append(replace(
                            config, scenario=scenario, forcing=forcing,
                            q_scale=q_scale, r_p=r_p, r_d=r_d,
                            sweep_scenario=(), sweep_forcing=(),
                            sweep_q_scale=(), sweep_r_p=(), sweep_r_d=(),
                        ))
    return points


def _run_task(args):
    point_index, trial_index, cfg = args
    return point_index, trial_index, run_trial(cfg, trial_index)


def run_point(config: ExperimentConfig, jobs: int = 1) -> list[MetricsRecord]:
    """All trials of a single configuration, in trial order."""
    tasks = [(0, t, config) for t in range(config.trials)]
    results = _execute(tasks, jobs)
    return [results[(0, t)] for t in range(config.trials)]


def _execute(tasks, jobs: int) -> dict:
    results = {}
    if jobs <= 1:
        for task in tasks:
            p, t, rec = _run_task(task)
            results[(p, t)] = rec
        return results
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for p, t, rec in pool.map(_run_task, tasks, chunksize=1):
            results[(p, t)] = rec
    return results


def summarize(config: ExperimentConfig, records: list[MetricsRecord]) -> SummaryRow:
    ok = [rec for rec in records if not rec.failed]
    if ok:
        per_trial = np.array([rec.mean_rmse for rec in ok])
        mean_rmse = float(np.mean(per_trial))
        std_rmse = float(np.std(per_trial))
        mean_proj = float(np.mean([rec.mean_rmse_proj for rec in ok]))
        resamp_pct = float(100.0 * np.mean([rec.resample_fraction for rec in ok]))
    else:
        mean_rmse = std_rmse = mean_proj = resamp_pct = float("nan")
    return SummaryRow(
        r_p=config.r_p, r_d=config.r_d, forcing=config.forcing,
        scenario=config.scenario, q_scale=config.q_scale,
        mean_rmse=mean_rmse, std_rmse=std_rmse, mean_rmse_proj=mean_proj,
        resamp_pct=resamp_pct, failed_trials=len(records) - len(ok),
    )


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> list[SummaryRow]:
    points = sweep_points(config)
    tasks = [(p, t, cfg) for p, cfg in enumerate(points) for t in range(cfg.trials)]
    logger.info("sweep: %d points x %d trials, %d worker(s)",
                len(points), config.trials, max(jobs, 1))
    results = _execute(tasks, jobs)
    rows = []
    for p, cfg in enumerate(points):
        records = [results[(p, t)] for t in range(cfg.trials)]
        rows.append(summarize(cfg, records))
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.10g}"


def write_trial_csv(path: str, records: list[MetricsRecord], cycle_dt: float):
    """Per-trial metrics, one row per completed observation time."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "obs_index", "time", "rmse", "rmse_proj",
                         "ess", "resampled"])
        for rec in records:
            for i in range(rec.n_observations):
                obs_index = i + 1
                writer.writerow([
                    rec.trial, obs_index, _fmt(obs_index * cycle_dt),
                    _fmt(rec.rmse[i]), _fmt(rec.rmse_proj[i]),
                    _fmt(rec.ess[i]), int(rec.resampled[i]),
                ])


def write_summary_csv(path: str, rows: list[SummaryRow], model_kind: str):
    """Sweep summary; the third column is the forcing for the cyclic model and
    the observation scenario for the shallow-water model."""
    third = "F" if model_kind == "l96" else "scenario"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r_p", "r_d", third, "Q_scale", "mean_rmse",
                         "std_rmse", "mean_rmse_proj", "resamp_pct",
                         "failed_trials"])
        for row in rows:
            third_value = _fmt(row.forcing) if model_kind == "l96" else row.scenario
            writer.writerow([
                row.r_p, row.r_d, third_value, _fmt(row.q_scale),
                _fmt(row.mean_rmse), _fmt(row.std_rmse),
                _fmt(row.mean_rmse_proj), _fmt(row.resamp_pct),
                row.failed_trials,
            ])
