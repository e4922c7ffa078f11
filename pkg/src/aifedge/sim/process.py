"""Seeded metric generation and Monte-Carlo ground truth."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm

from aifedge.domain import Configuration, MetricBatch, enumerate_configs
from aifedge.sim.profiles import Scenario
from aifedge.slo import indicator_columns

# stream tags keep batch draws and oracle draws on separate random streams
_BATCH_STREAM = 0
_ORACLE_STREAM = 1


def _rng(scenario: Scenario, *keys: int) -> np.random.Generator:
    return np.random.default_rng([scenario.seed % 2**63, *keys])


def truncated_normal(rng: np.random.Generator, mean: float, std: float, n: int) -> np.ndarray:
    """Normal draws conditioned on being >= 0 (rejection resampling)."""
    if std == 0:
        return np.full(n, max(mean, 0.0))
    out = rng.normal(mean, std, n)
    bad = out < 0
    for _ in range(1000):
        if not bad.any():
            break
        out[bad] = rng.normal(mean, std, int(bad.sum()))
        bad = out < 0
    else:
        out[bad] = 0.0
    return out


def draw_metrics(scenario: Scenario, config: Configuration, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    return {
        m: truncated_normal(rng, *_params(scenario, config, m), n)
        for m in scenario.service.metrics
    }


def _params(scenario: Scenario, config: Configuration, metric: str) -> tuple[float, float]:
    d = scenario.dist(config, metric)
    return d.mean, d.std


def batch_size(scenario: Scenario, config: Configuration) -> int:
    fps = scenario.space.numeric(config, scenario.service.rate_parameter)
    return max(1, round(fps * scenario.window_ms / 1000))


def generate_batch(scenario: Scenario, config: Configuration, cycle: int) -> MetricBatch:
    """One evaluation window of samples; a pure function of (seed, cycle, config)."""
    space = scenario.space
    config = space.validate(config)
    n = batch_size(scenario, config)
    rng = _rng(scenario, _BATCH_STREAM, cycle, space.index(config))
    columns = draw_metrics(scenario, config, n, rng)
    start = cycle * scenario.window_ms
    timestamps = [start + (i * scenario.window_ms) // n for i in range(n)]
    return MetricBatch.from_arrays(config, timestamps, columns, scenario.window_ms)


def true_fulfillment(scenario: Scenario, config: Configuration, n: int = 10_000) -> float:
    """Monte-Carlo estimate of the expected overall fulfillment under ``config``."""
    space = scenario.space
    config = space.validate(config)
    rng = _rng(scenario, _ORACLE_STREAM, space.index(config), n)
    columns = draw_metrics(scenario, config, n, rng)
    hits = indicator_columns(columns, config, scenario.slos, space)
    return float(np.mean([h.mean() for h in hits.values()]))


def true_optimum(scenario: Scenario, n: int = 10_000) -> tuple[Configuration, float]:
    """Exhaustive argmax of ``true_fulfillment``; ties go to the lowest total rank."""
    best = None
    for config in enumerate_configs(scenario.space):
        value = true_fulfillment(scenario, config, n)
        key = (round(value, 12), -sum(scenario.space.ranks(config)))
        if best is None or key > best[0]:
            best = (key, config, value)
    return best[1], best[2]


def expected_fulfillment(scenario: Scenario, config: Configuration) -> dict[str, float]:
    """Closed-form per-SLO fulfillment probabilities under the truncated normals."""
    space = scenario.space
    out = {}
    for slo in scenario.slos:
        mean, std = _params(scenario, config, slo.metric)
        lo, hi = slo.bounds(config, space)
        lo, hi = max(lo, 0.0), max(hi, 0.0)
        if std == 0:
            x = max(mean, 0.0)
            out[slo.name] = float(lo <= x <= hi)
            continue
        mass = norm.sf(0.0, mean, std)
        out[slo.name] = float((norm.cdf(hi, mean, std) - norm.cdf(lo, mean, std)) / mass)
    return out
