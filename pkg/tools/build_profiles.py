"""Regenerate the shipped service/device profile tables.

Cell means are laid out from a few per-service shape parameters; the device
table rescales them. Run with ``--check`` to print the closed-form
fulfillment grid of every scenario next to the published targets.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from aifedge.domain import ParameterSpace, ParameterSpec, SloSpec, Constant, ScaledReciprocal, enumerate_configs
from aifedge.sim.profiles import DeviceProfile, MetricDist, Scenario, ServiceProfile, service_to_json
from aifedge.sim.process import expected_fulfillment

DATA = Path(__file__).resolve().parents[1] / "src" / "aifedge" / "sim" / "data"

FPS = (5, 10, 15, 20, 25)

DEVICES = [
    DeviceProfile("AGX+", 1.0, 0.0, 1.0),
    DeviceProfile("AGX-", 1.25, -0.5, 0.95),
    DeviceProfile("NX+", 1.3, -1.0, 0.9),
    DeviceProfile("NX-", 1.375, -1.5, 0.85),
]

TIME_SLO = SloSpec("time", "time", upper=ScaledReciprocal(1000.0, "fps"))
ENERGY_SLO = SloSpec("energy", "energy", upper=Constant(15.0))
RATE_SLO = SloSpec("rate", "rate", lower=Constant(3.0))

# (service, device) -> (config label, published fulfillment)
TARGETS = {
    ("CV", "AGX+"): ({"pixel": "1080", "fps": "5"}, 0.94),
    ("CV", "AGX-"): ({"pixel": "720", "fps": "15"}, 0.62),
    ("CV", "NX+"): ({"pixel": "720", "fps": "10"}, 0.83),
    ("CV", "NX-"): ({"pixel": "480", "fps": "5"}, 0.73),
    ("QR", "AGX+"): ({"pixel": "720", "fps": "15"}, 1.0),
    ("QR", "AGX-"): ({"pixel": "720", "fps": "5"}, 1.0),
    ("QR", "NX+"): ({"pixel": "720", "fps": "5"}, 1.0),
    ("QR", "NX-"): ({"pixel": "480", "fps": "10"}, 1.0),
    ("LI", "AGX+"): ({"mode": "single", "fps": "5"}, 0.98),
    ("LI", "AGX-"): ({"mode": "single", "fps": "5"}, 0.93),
    ("LI", "NX+"): ({"mode": "single", "fps": "5"}, 0.92),
    ("LI", "NX-"): ({"mode": "single", "fps": "5"}, 0.90),
}


def _fps():
    return ParameterSpec.numeric_states("fps", FPS)


def _pixel():
    return ParameterSpec.numeric_states("pixel", (480, 720, 1080))


def build_cv() -> ServiceProfile:
    space = ParameterSpace((_pixel(), _fps()))
    # per-frame time (mean, std) at 5 fps; contention grows it with the frame rate
    time = {"480": (30.0, 8.0), "720": (57.0, 17.0), "1080": (143.0, 24.0)}
    # draw at 5 fps and extra watts per additional fps
    energy = {"480": (12.2, 0.22), "720": (12.8, 0.24), "1080": (13.4, 0.26)}
    rate = {"480": (2.3, 1.0), "720": (3.67, 1.0), "1080": (4.9, 1.0)}
    cells = {}
    for c in enumerate_configs(space):
        px, fps = c["pixel"], float(c["fps"])
        t_mean, t_std = time[px]
        e_base, e_slope = energy[px]
        cells[c] = {
            "time": MetricDist(t_mean * (1 + 0.01 * (fps - 5)), t_std),
            "energy": MetricDist(e_base + e_slope * (fps - 5), 1.5),
            "rate": MetricDist(*rate[px]),
        }
    return ServiceProfile("CV", space, (TIME_SLO, ENERGY_SLO, RATE_SLO), cells)


def build_qr() -> ServiceProfile:
    space = ParameterSpace((_pixel(), _fps()))
    time = {"480": 30.0, "720": 48.0, "1080": 85.0}
    watts = {"480": 7.0, "720": 7.5, "1080": 8.5}
    cells = {}
    for c in enumerate_configs(space):
        px, fps = c["pixel"], float(c["fps"])
        t_mean = time[px] * (1 + 0.01 * (fps - 5))
        cells[c] = {
            "time": MetricDist(t_mean, 0.08 * t_mean),
            "energy": MetricDist(watts[px] + 0.3 * (fps - 5), 0.8),
        }
    return ServiceProfile("QR", space, (TIME_SLO, ENERGY_SLO), cells)


def build_li() -> ServiceProfile:
    space = ParameterSpace((ParameterSpec.categorical("mode", ("single", "double", "all")), _fps()))
    time = {"single": (95.5, 59.7), "double": (135.0, 60.0), "all": (190.0, 70.0)}
    energy = {"single": 9.0, "double": 10.5, "all": 12.0}
    cells = {}
    for c in enumerate_configs(space):
        mode, fps = c["mode"], float(c["fps"])
        t_mean, t_std = time[mode]
        cells[c] = {
            "time": MetricDist(t_mean * (1 + 0.01 * (fps - 5)), t_std),
            "energy": MetricDist(energy[mode] + 0.15 * (fps - 5), 1.4),
        }
    return ServiceProfile("LI", space, (TIME_SLO, ENERGY_SLO), cells)


BUILDERS = {"CV": build_cv, "QR": build_qr, "LI": build_li}


def check() -> None:
    for sid, build in BUILDERS.items():
        service = build()
        for dev in DEVICES:
            sc = Scenario(service, dev)
            grid = {}
            for c in enumerate_configs(service.space):
                p = expected_fulfillment(sc, c)
                joint = 1.0
                for v in p.values():
                    joint *= v
                grid[c] = (sum(p.values()) / len(p), joint)
            best = max(grid, key=lambda c: (grid[c][0], -sum(service.space.ranks(c))))
            best_pv = max(grid, key=lambda c: grid[c][1])
            target_cfg, target = TARGETS[(sid, dev.id)]
            tc = service.space.config(target_cfg)
            print(f"{sid} {dev.id:5s} target {tc} {grid[tc][0]:.3f} (want {target:.2f})  "
                  f"opt {best} {grid[best][0]:.3f}  pv-opt {best_pv} mean {grid[best_pv][0]:.3f} joint {grid[best_pv][1]:.3f}")
            names = service.space.names
            p2 = service.space.specs[0]
            rows = []
            for s0 in p2.labels:
                cells = [grid[service.space.config({names[0]: s0, names[1]: f})] for f in service.space.specs[1].labels]
                rows.append(f"   {s0:>6s} " + " ".join(f"{m:.2f}/{j:.2f}" for m, j in cells))
            print("\n".join(rows))


def write() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    for sid, build in BUILDERS.items():
        (DATA / f"{sid}.json").write_text(json.dumps(service_to_json(build()), indent=1) + "\n")
    devices = {"devices": [
        {"id": d.id, "time_multiplier": d.time_multiplier, "energy_offset": d.energy_offset,
         "energy_multiplier": d.energy_multiplier} for d in DEVICES
    ]}
    (DATA / "devices.json").write_text(json.dumps(devices, indent=1) + "\n")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()
    if args.check:
        check()
    else:
        write()
