"""Service and device profiles for the simulated edge environment.

A service profile stores, for every grid configuration, the mean and standard
deviation of each metric on a reference device. A device profile rescales
those: processing time (and its spread) by ``time_multiplier``, energy by
``energy_offset + energy_multiplier * x``. Other metrics pass through.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from aifedge.domain import (
    Configuration,
    ParameterSpace,
    SloSpec,
    check_thresholds,
    dump_definitions,
    enumerate_configs,
    load_definitions,
)
from aifedge.errors import ConfigurationError, ProfileNotFoundError

SERVICES = ("CV", "QR", "LI")
DEVICES = ("AGX+", "AGX-", "NX+", "NX-")

TIME = "time"
ENERGY = "energy"


@dataclass(frozen=True)
class MetricDist:
    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0:
            raise ConfigurationError("metric stddev must be >= 0")


@dataclass(frozen=True)
class DeviceProfile:
    id: str
    time_multiplier: float = 1.0
    energy_offset: float = 0.0
    energy_multiplier: float = 1.0

    def __post_init__(self):
        if self.time_multiplier <= 0 or self.energy_multiplier <= 0:
            raise ConfigurationError(f"device {self.id!r}: multipliers must be positive")

    def adjust(self, metric: str, dist: MetricDist) -> MetricDist:
        if metric == TIME:
            return MetricDist(dist.mean * self.time_multiplier, dist.std * self.time_multiplier)
        if metric == ENERGY:
            return MetricDist(
                self.energy_offset + self.energy_multiplier * dist.mean,
                dist.std * self.energy_multiplier,
            )
        return dist


REFERENCE_DEVICE = DeviceProfile("reference")


@dataclass(frozen=True, eq=False)
class ServiceProfile:
    id: str
    space: ParameterSpace
    slos: tuple[SloSpec, ...]
    cells: Mapping[Configuration, Mapping[str, MetricDist]]
    rate_parameter: str = "fps"

    def __post_init__(self):
        metrics = None
        for config in enumerate_configs(self.space):
            if config not in self.cells:
                raise ConfigurationError(f"service {self.id!r}: no cell for {config!r}")
            names = set(self.cells[config])
            if metrics is None:
                metrics = names
            elif names != metrics:
                raise ConfigurationError(f"service {self.id!r}: cell {config!r} has metrics {sorted(names)}")
        missing = {slo.metric for slo in self.slos} - (metrics or set())
        if missing:
            raise ConfigurationError(f"service {self.id!r}: SLOs reference unknown metrics {sorted(missing)}")

    @property
    def metrics(self) -> tuple[str, ...]:
        return tuple(next(iter(self.cells.values())))


@dataclass(frozen=True)
class Scenario:
    service: ServiceProfile
    device: DeviceProfile
    seed: int = 0
    window_ms: int = 2000

    def __post_init__(self):
        if self.window_ms <= 0:
            raise ConfigurationError("window_ms must be positive")

    @property
    def space(self) -> ParameterSpace:
        return self.service.space

    @property
    def slos(self) -> tuple[SloSpec, ...]:
        return self.service.slos

    def dist(self, config: Configuration, metric: str) -> MetricDist:
        return self.device.adjust(metric, self.service.cells[config][metric])


# -- files -----------------------------------------------------------------


def _data_dir() -> Path:
    return Path(str(resources.files("aifedge.sim") / "data"))


def service_from_json(doc: Mapping) -> ServiceProfile:
    try:
        space, slos = load_definitions(doc)
        cells = {}
        for cell in doc["cells"]:
            config = space.config(cell["config"])
            cells[config] = {
                m: MetricDist(float(v["mean"]), float(v["std"])) for m, v in cell["metrics"].items()
            }
        return ServiceProfile(str(doc["service"]), space, slos, cells, doc.get("rate_parameter", "fps"))
    except KeyError as exc:
        raise ConfigurationError(f"profile missing field {exc}") from exc


def service_to_json(profile: ServiceProfile, device: str = "reference") -> dict:
    doc = {"service": profile.id, "device": device}
    doc.update(dump_definitions(profile.space, profile.slos))
    doc["rate_parameter"] = profile.rate_parameter
    doc["cells"] = [
        {
            "config": config.as_dict(),
            "metrics": {m: {"mean": d.mean, "std": d.std} for m, d in profile.cells[config].items()},
        }
        for config in enumerate_configs(profile.space)
    ]
    return doc


def load_service(service: str, profile_dir: str | Path | None = None) -> ServiceProfile:
    base = Path(profile_dir) if profile_dir else _data_dir()
    path = base / f"{service}.json"
    if not path.exists():
        raise ProfileNotFoundError(f"no service profile {service!r} at {path}")
    profile = service_from_json(json.loads(path.read_text()))
    check_thresholds(profile.slos, profile.space)
    return profile


def load_devices(profile_dir: str | Path | None = None) -> dict[str, DeviceProfile]:
    base = Path(profile_dir) if profile_dir else _data_dir()
    path = base / "devices.json"
    if not path.exists():
        raise ProfileNotFoundError(f"no device table at {path}")
    doc = json.loads(path.read_text())
    return {
        d["id"]: DeviceProfile(d["id"], d["time_multiplier"], d["energy_offset"], d["energy_multiplier"])
        for d in doc["devices"]
    }


def load_scenario(
    service: str,
    device: str,
    seed: int = 0,
    window_ms: int = 2000,
    profile_dir: str | Path | None = None,
) -> Scenario:
    devices = load_devices(profile_dir)
    if device not in devices:
        raise ProfileNotFoundError(f"unknown device {device!r}; known: {sorted(devices)}")
    return Scenario(load_service(service, profile_dir), devices[device], seed, window_ms)
