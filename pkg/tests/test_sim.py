import json

import numpy as np
import pytest
from scipy.stats import truncnorm

from aifedge.domain import Constant, ParameterSpace, ParameterSpec, SloSpec, enumerate_configs
from aifedge.errors import ConfigurationError, InvalidConfigurationError, ProfileNotFoundError
from aifedge.sim import (
    DEVICES,
    SERVICES,
    DeviceProfile,
    MetricDist,
    Scenario,
    ServiceProfile,
    batch_size,
    expected_fulfillment,
    generate_batch,
    load_devices,
    load_scenario,
    load_service,
    service_from_json,
    service_to_json,
    true_fulfillment,
    true_optimum,
)
from aifedge.sim.process import truncated_normal
from aifedge.slo import batch_fulfillment


def test_batch_size_follows_fps():
    scenario = load_scenario("CV", "AGX+")
    config = scenario.space.config(pixel=720, fps=5)
    batch = generate_batch(scenario, config, 0)
    assert len(batch) == 10
    assert batch_size(scenario, scenario.space.config(pixel=720, fps=25)) == 50
    short = Scenario(scenario.service, scenario.device, 0, window_ms=50)
    assert batch_size(short, config) == 1


def test_batches_are_pure_functions_of_seed_cycle_config():
    scenario = load_scenario("LI", "NX-", seed=7)
    config = scenario.space.config(mode="double", fps=15)
    a = generate_batch(scenario, config, 3)
    b = generate_batch(load_scenario("LI", "NX-", seed=7), config, 3)
    assert a == b
    assert generate_batch(scenario, config, 4) != a
    assert generate_batch(load_scenario("LI", "NX-", seed=8), config, 3) != a
    assert all(s.config == config for s in a)
    assert [s.timestamp_ms for s in a] == sorted(s.timestamp_ms for s in a)


def test_generate_batch_rejects_foreign_config():
    scenario = load_scenario("CV", "AGX+")
    other = load_scenario("LI", "AGX+").space.config(mode="single", fps=5)
    with pytest.raises(InvalidConfigurationError):
        generate_batch(scenario, other, 0)


def test_metrics_are_non_negative():
    for service in SERVICES:
        scenario = load_scenario(service, "NX-", seed=1)
        for config in enumerate_configs(scenario.space):
            batch = generate_batch(scenario, config, 0)
            for metric in scenario.service.metrics:
                assert (batch.column(metric) >= 0).all()


def test_truncated_normal_moments():
    rng = np.random.default_rng(0)
    x = truncated_normal(rng, 1.0, 2.0, 200_000)
    assert x.min() >= 0
    ref = truncnorm(-0.5, np.inf, loc=1.0, scale=2.0)
    assert x.mean() == pytest.approx(ref.mean(), abs=0.02)
    assert x.std() == pytest.approx(ref.std(), abs=0.02)
    assert (truncated_normal(rng, -3.0, 0.0, 4) == 0).all()


def test_slow_device_misses_time_slo_at_high_rate():
    scenario = load_scenario("CV", "NX-")
    config = scenario.space.config(pixel=1080, fps=25)
    assert scenario.dist(config, "time").mean > 40
    batch = generate_batch(scenario, config, 0)
    report = batch_fulfillment(batch, scenario.slos, scenario.space)
    assert report.per_slo["time"] < 0.5
    assert expected_fulfillment(scenario, config)["time"] < 0.5


def test_monte_carlo_matches_closed_form():
    for service in SERVICES:
        for device in DEVICES:
            scenario = load_scenario(service, device)
            for config in enumerate_configs(scenario.space)[::4]:
                exact = float(np.mean(list(expected_fulfillment(scenario, config).values())))
                assert true_fulfillment(scenario, config, 10_000) == pytest.approx(exact, abs=0.02)


def test_true_fulfillment_near_one_when_means_sit_inside_bounds():
    scenario = load_scenario("QR", "AGX+")
    assert true_fulfillment(scenario, scenario.space.config(pixel=480, fps=5)) == pytest.approx(1.0, abs=1e-3)


def test_true_optimum_examples():
    cv = load_scenario("CV", "AGX+")
    assert true_optimum(cv)[0] == cv.space.config(pixel=1080, fps=5)
    for device in DEVICES:
        li = load_scenario("LI", device)
        assert true_optimum(li)[0] == li.space.config(mode="single", fps=5)


def flat_service():
    space = ParameterSpace((ParameterSpec.numeric_states("fps", (5, 10, 15)),))
    slo = SloSpec("time", "time", upper=Constant(100.0))
    cells = {c: {"time": MetricDist(1.0, 0.1)} for c in enumerate_configs(space)}
    return ServiceProfile("flat", space, (slo,), cells)


def test_true_optimum_breaks_ties_toward_lowest_rank():
    scenario = Scenario(flat_service(), DeviceProfile("d"))
    best, value = true_optimum(scenario, 2000)
    assert best == scenario.space.config(fps=5)
    assert value == 1.0


def test_device_ordering():
    devices = load_devices()
    assert set(devices) == set(DEVICES)
    assert devices["AGX-"].time_multiplier > devices["AGX+"].time_multiplier
    assert devices["NX-"].time_multiplier > devices["NX+"].time_multiplier
    for service in SERVICES:
        profile = load_service(service)
        for config in enumerate_configs(profile.space):
            for fast, slow in (("AGX+", "AGX-"), ("NX+", "NX-")):
                a = Scenario(profile, devices[fast]).dist(config, "time").mean
                b = Scenario(profile, devices[slow]).dist(config, "time").mean
                assert b >= a


def test_device_adjustment():
    device = DeviceProfile("x", time_multiplier=2.0, energy_offset=-1.0, energy_multiplier=0.5)
    assert device.adjust("time", MetricDist(10, 2)) == MetricDist(20, 4)
    assert device.adjust("energy", MetricDist(10, 2)) == MetricDist(4, 1)
    assert device.adjust("rate", MetricDist(3, 1)) == MetricDist(3, 1)
    with pytest.raises(ConfigurationError):
        DeviceProfile("bad", time_multiplier=0.0)
    with pytest.raises(ConfigurationError):
        MetricDist(1.0, -0.1)


def test_profile_json_round_trip(tmp_path):
    for service in SERVICES:
        profile = load_service(service)
        again = service_from_json(json.loads(json.dumps(service_to_json(profile))))
        assert again.space == profile.space
        assert again.slos == profile.slos
        assert all(dict(again.cells[c]) == dict(profile.cells[c]) for c in enumerate_configs(profile.space))


def test_profile_errors(tmp_path):
    with pytest.raises(ProfileNotFoundError):
        load_service("XX")
    with pytest.raises(ProfileNotFoundError):
        load_scenario("CV", "TX2")
    doc = service_to_json(load_service("CV"))
    doc["cells"] = doc["cells"][1:]
    with pytest.raises(ConfigurationError, match="no cell"):
        service_from_json(doc)
    doc = service_to_json(load_service("CV"))
    del doc["cells"][0]["metrics"]["rate"]
    with pytest.raises(ConfigurationError):
        service_from_json(doc)
    with pytest.raises(ConfigurationError):
        Scenario(load_service("CV"), DeviceProfile("d"), window_ms=0)
