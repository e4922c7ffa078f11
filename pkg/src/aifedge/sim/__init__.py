"""Simulated edge services standing in for real stream-processing workloads."""

from aifedge.sim.process import (
    batch_size,
    draw_metrics,
    expected_fulfillment,
    generate_batch,
    true_fulfillment,
    true_optimum,
)
from aifedge.sim.profiles import (
    DEVICES,
    SERVICES,
    DeviceProfile,
    MetricDist,
    Scenario,
    ServiceProfile,
    load_devices,
    load_scenario,
    load_service,
    service_from_json,
    service_to_json,
)

__all__ = [
    "DEVICES", "SERVICES", "DeviceProfile", "MetricDist", "Scenario", "ServiceProfile",
    "batch_size", "draw_metrics", "expected_fulfillment", "generate_batch", "load_devices",
    "load_scenario", "load_service", "service_from_json", "service_to_json",
    "true_fulfillment", "true_optimum",
]
