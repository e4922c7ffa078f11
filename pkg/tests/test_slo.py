import pytest
from hypothesis import given, strategies as st

from conftest import make_batch

from aifedge.domain import Constant, MetricBatch, MetricSample, SloSpec
from aifedge.errors import ConfigurationError, EmptyBatchError, MissingMetricError
from aifedge.slo import batch_fulfillment, sample_fulfills, slo_fulfillment


def test_time_budget_follows_fps(cv_space, time_slo):
    sample = MetricSample(0, {"time": 90.0}, cv_space.config(pixel=720, fps=10))
    assert sample_fulfills(sample, time_slo) == 1
    sample = MetricSample(0, {"time": 110.0}, cv_space.config(pixel=720, fps=10))
    assert sample_fulfills(sample, time_slo) == 0


def test_bounds_are_inclusive(cv_space, energy_slo):
    config = cv_space.config(pixel=480, fps=5)
    assert sample_fulfills(MetricSample(0, {"energy": 15.0}, config), energy_slo) == 1
    assert sample_fulfills(MetricSample(0, {"energy": 15.1}, config), energy_slo) == 0
    lower = SloSpec("rate", "rate", lower=Constant(3.0))
    assert sample_fulfills(MetricSample(0, {"rate": 3.0}, config), lower) == 1
    assert sample_fulfills(MetricSample(0, {"rate": 2.999}, config), lower) == 0


def test_missing_metric(cv_space, energy_slo):
    sample = MetricSample(0, {"time": 1.0}, cv_space.config(pixel=480, fps=5))
    with pytest.raises(MissingMetricError):
        sample_fulfills(sample, energy_slo)


def test_ratios(cv_space, energy_slo):
    config = cv_space.config(pixel=480, fps=5)
    batch = make_batch(config, [10] * 7 + [20] * 3, metric="energy")
    assert slo_fulfillment(batch, energy_slo) == 0.7
    assert slo_fulfillment(make_batch(config, [1, 2], metric="energy"), energy_slo) == 1.0
    assert slo_fulfillment(make_batch(config, [16, 17], metric="energy"), energy_slo) == 0.0


def test_empty_batch(energy_slo):
    with pytest.raises(EmptyBatchError):
        slo_fulfillment(MetricBatch(()), energy_slo)


def test_overall_is_mean(cv_space, time_slo, energy_slo):
    config = cv_space.config(pixel=480, fps=10)
    samples = (
        MetricSample(0, {"time": 50.0, "energy": 10.0}, config),
        MetricSample(1, {"time": 60.0, "energy": 20.0}, config),
    )
    report = batch_fulfillment(MetricBatch(samples), (time_slo, energy_slo))
    assert report.per_slo == {"time": 1.0, "energy": 0.5}
    assert report.overall == 0.75
    assert report.sample_count == 2


def test_all_fulfilled(cv_space, time_slo, energy_slo):
    config = cv_space.config(pixel=480, fps=10)
    rate = SloSpec("rate", "rate", lower=Constant(1.0))
    samples = (MetricSample(0, {"time": 5.0, "energy": 1.0, "rate": 2.0}, config),)
    assert batch_fulfillment(MetricBatch(samples), (time_slo, energy_slo, rate)).overall == 1.0


def test_empty_slo_set(cv_space):
    batch = make_batch(cv_space.config(pixel=480, fps=5), [1.0])
    with pytest.raises(ConfigurationError):
        batch_fulfillment(batch, ())


values = st.lists(st.floats(0, 30, allow_nan=False), min_size=1, max_size=40)


@given(values, st.floats(0, 30, allow_nan=False), st.randoms(use_true_random=False))
def test_monotone_and_permutation_invariant(energies, extra, rnd):
    from aifedge.domain import Configuration

    slo = SloSpec("energy", "energy", upper=Constant(15.0))
    config = Configuration.of(pixel="480", fps="5")
    base = slo_fulfillment(make_batch(config, energies, metric="energy"), slo)
    grown = slo_fulfillment(make_batch(config, energies + [extra], metric="energy"), slo)
    if extra <= 15.0:
        assert grown >= base
    else:
        assert grown <= base
    shuffled = list(energies)
    rnd.shuffle(shuffled)
    assert slo_fulfillment(make_batch(config, shuffled, metric="energy"), slo) == base
    assert slo_fulfillment(make_batch(config, energies * 2, metric="energy"), slo) == base
