"""
Per-step timing series for the scalability comparison.
"""

from typing import List

import numpy as np
from scipy.stats import spearmanr

from src.engines.harness.experiment import build_scenario, run_single
from src.schemas.experiment import ExperimentConfig, TimingSeries


def benchmark_timing(config: ExperimentConfig) -> List[TimingSeries]:
    """
    Wall time of every filtering step for each method in config.methods.

    Runs are sequential on one worker; the first ``warmup_steps`` steps of
    each run are dropped.
    """
    timed = config.with_overrides(record_timing=True)
    scenario = build_scenario(timed)
    series = []
    for method in timed.methods:
        for seed in timed.seeds:
            result = run_single(timed, method, seed, scenario)
            kept = result.records[timed.warmup_steps:]
            series.append(
                TimingSeries(
                    method=method,
                    run=seed,
                    t=[r.t for r in kept],
                    step_ms=[r.step_ms for r in kept],
                )
            )
    return series


def quarter_medians(step_ms: List[float]) -> List[float]:
    """Median step time in each quarter of the series."""
    return [float(np.median(q)) for q in np.array_split(np.asarray(step_ms), 4) if len(q)]


def time_trend(series: TimingSeries) -> float:
    """Spearman rank correlation between step index and step time."""
    return float(spearmanr(series.t, series.step_ms)[0])
