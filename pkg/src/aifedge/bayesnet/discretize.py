"""Map raw metric batches onto network observations."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from aifedge.bayesnet.model import Dataset, VariableDef
from aifedge.domain import MetricBatch, ParameterSpace, SloSpec
from aifedge.errors import EmptyBatchError
from aifedge.slo import sample_fulfills


def network_variables(space: ParameterSpace, slos: Iterable[SloSpec]) -> tuple[VariableDef, ...]:
    """Parameters first (space order), then one boolean indicator per SLO."""
    params = tuple(VariableDef.parameter(s.name, s.labels) for s in space.specs)
    return params + tuple(VariableDef.slo(slo.name) for slo in slos)


def discretize_batch(batch: MetricBatch, slos: Iterable[SloSpec], space: ParameterSpace) -> Dataset:
    """One row per sample: the batch configuration plus fulfilled/violated per SLO."""
    slos = tuple(slos)
    if len(batch) == 0:
        raise EmptyBatchError("cannot discretize an empty batch")
    variables = network_variables(space, slos)
    ranks = space.ranks(batch.config)
    codes = np.empty((len(batch), len(variables)), dtype=np.int64)
    codes[:, : len(ranks)] = ranks
    for j, slo in enumerate(slos, start=len(ranks)):
        # state code 1 is "fulfilled"
        codes[:, j] = [sample_fulfills(s, slo, space) for s in batch]
    return Dataset(variables, codes)
