import pytest

from aifedge.domain import (
    Constant,
    MetricBatch,
    MetricSample,
    ParameterSpace,
    ParameterSpec,
    ScaledReciprocal,
    SloSpec,
)


@pytest.fixture
def cv_space():
    return ParameterSpace((
        ParameterSpec.numeric_states("pixel", (480, 720, 1080)),
        ParameterSpec.numeric_states("fps", (5, 10, 15, 20, 25)),
    ))


@pytest.fixture
def li_space():
    return ParameterSpace((
        ParameterSpec.categorical("mode", ("single", "double", "all")),
        ParameterSpec.numeric_states("fps", (5, 10, 15, 20, 25)),
    ))


@pytest.fixture
def time_slo():
    return SloSpec("time", "time", upper=ScaledReciprocal(1000.0, "fps"))


@pytest.fixture
def energy_slo():
    return SloSpec("energy", "energy", upper=Constant(15.0))


def make_batch(config, values, metric="time", start=0, window_ms=2000):
    samples = tuple(MetricSample(start + i, {metric: float(v)}, config) for i, v in enumerate(values))
    return MetricBatch(samples, window_ms)
