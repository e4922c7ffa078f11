"""SLO fulfillment of metric batches.

A sample fulfills an SLO when its metric lies inside the (inclusive) bounds
evaluated for the sample's configuration. Per-SLO fulfillment is the share of
fulfilling samples; overall fulfillment is the unweighted mean across SLOs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from aifedge.domain import Configuration, MetricBatch, MetricSample, ParameterSpace, SloSpec
from aifedge.errors import ConfigurationError, EmptyBatchError, MissingMetricError


@dataclass(frozen=True)
class FulfillmentReport:
    per_slo: Mapping[str, float]
    overall: float
    sample_count: int


def _metric(sample: MetricSample, metric: str) -> float:
    try:
        return sample.values[metric]
    except KeyError:
        raise MissingMetricError(f"sample at {sample.timestamp_ms} ms has no metric {metric!r}") from None


def sample_fulfills(sample: MetricSample, slo: SloSpec, space: ParameterSpace | None = None) -> int:
    value = _metric(sample, slo.metric)
    lo, hi = slo.bounds(sample.config, space)
    return int(lo <= value <= hi)


def slo_fulfillment(batch: MetricBatch, slo: SloSpec, space: ParameterSpace | None = None) -> float:
    if len(batch) == 0:
        raise EmptyBatchError("cannot evaluate an empty batch")
    hits = sum(sample_fulfills(s, slo, space) for s in batch)
    return hits / len(batch)


def batch_fulfillment(batch: MetricBatch, slos: Iterable[SloSpec], space: ParameterSpace | None = None) -> FulfillmentReport:
    slos = tuple(slos)
    if not slos:
        raise ConfigurationError("SLO set is empty")
    if len(batch) == 0:
        raise EmptyBatchError("cannot evaluate an empty batch")
    per_slo = {slo.name: slo_fulfillment(batch, slo, space) for slo in slos}
    overall = sum(per_slo.values()) / len(per_slo)
    return FulfillmentReport(per_slo, overall, len(batch))


def indicator_columns(
    columns: Mapping[str, np.ndarray],
    config: Configuration,
    slos: Iterable[SloSpec],
    space: ParameterSpace | None = None,
) -> dict[str, np.ndarray]:
    """Vectorised in-range indicators for samples that share one configuration."""
    out = {}
    for slo in slos:
        if slo.metric not in columns:
            raise MissingMetricError(f"no metric {slo.metric!r} in columns")
        lo, hi = slo.bounds(config, space)
        values = np.asarray(columns[slo.metric], dtype=float)
        out[slo.name] = (values >= lo) & (values <= hi)
    return out
