"""Shared vocabulary: parameter grids, configurations, SLOs and metric batches.

Everything here is an immutable value object. Parameter spaces, SLO sets and
metric batches also have plain-text representations (JSON for definitions,
CSV for metric traces) that the rest of the package reads and writes.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from aifedge.errors import (
    ConfigurationError,
    InvalidConfigurationError,
    ThresholdEvaluationError,
)


@dataclass(frozen=True)
class ParameterState:
    label: str
    numeric: float | None = None


@dataclass(frozen=True)
class ParameterSpec:
    """One tunable knob with an ordered list of discrete states.

    The ordinal rank of a state is its position in ``states``.
    """

    name: str
    states: tuple[ParameterState, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ConfigurationError(f"parameter {self.name!r} has no states")
        labels = [s.label for s in self.states]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"parameter {self.name!r} has duplicate state labels")

    @classmethod
    def numeric_states(cls, name: str, values: Sequence[float | int]) -> ParameterSpec:
        return cls(name, tuple(ParameterState(_fmt_number(v), float(v)) for v in values))

    @classmethod
    def categorical(cls, name: str, labels: Sequence[str]) -> ParameterSpec:
        return cls(name, tuple(ParameterState(str(lbl)) for lbl in labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.states)

    def rank(self, label: str) -> int:
        for i, state in enumerate(self.states):
            if state.label == label:
                return i
        raise InvalidConfigurationError(f"state {label!r} is not defined for parameter {self.name!r}")

    def state(self, label: str) -> ParameterState:
        return self.states[self.rank(label)]


def _fmt_number(v: float | int) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


@dataclass(frozen=True, eq=False)
class Configuration:
    """One grid point: parameter name -> state label.

    Equality and hashing ignore the order of the assignment pairs.
    """

    assignment: tuple[tuple[str, str], ...]

    def __post_init__(self):
        pairs = tuple((str(k), str(v)) for k, v in self.assignment)
        names = [k for k, _ in pairs]
        if len(set(names)) != len(names):
            raise InvalidConfigurationError(f"parameter assigned twice in {pairs}")
        object.__setattr__(self, "assignment", pairs)

    @classmethod
    def of(cls, mapping: Mapping[str, object] | None = None, **kwargs) -> Configuration:
        items = dict(mapping or {}, **kwargs)
        return cls(tuple((k, str(v)) for k, v in items.items()))

    def __getitem__(self, name: str) -> str:
        for k, v in self.assignment:
            if k == name:
                return v
        raise InvalidConfigurationError(f"parameter {name!r} not assigned")

    def __contains__(self, name: object) -> bool:
        return any(k == name for k, _ in self.assignment)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return frozenset(self.assignment) == frozenset(other.assignment)

    def __hash__(self) -> int:
        return hash(frozenset(self.assignment))

    def as_dict(self) -> dict[str, str]:
        return dict(self.assignment)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.assignment)
        return f"<{inner}>"


@dataclass(frozen=True)
class ParameterSpace:
    specs: tuple[ParameterSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate parameter names in {names}")
        if not self.specs:
            raise ConfigurationError("parameter space needs at least one parameter")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(s.states) for s in self.specs)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def spec(self, name: str) -> ParameterSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise InvalidConfigurationError(f"unknown parameter {name!r}")

    def config(self, mapping: Mapping[str, object] | None = None, **kwargs) -> Configuration:
        """Build a validated configuration, canonically ordered by parameter order."""
        items = {k: str(v) for k, v in dict(mapping or {}, **kwargs).items()}
        unknown = set(items) - set(self.names)
        if unknown:
            raise InvalidConfigurationError(f"unknown parameters {sorted(unknown)}")
        pairs = []
        for spec in self.specs:
            if spec.name not in items:
                raise InvalidConfigurationError(f"parameter {spec.name!r} not assigned")
            spec.rank(items[spec.name])
            pairs.append((spec.name, items[spec.name]))
        return Configuration(tuple(pairs))

    def validate(self, config: Configuration) -> Configuration:
        if len(config.assignment) != len(self.specs):
            raise InvalidConfigurationError(f"{config!r} does not cover {self.names}")
        return self.config(config.as_dict())

    def ranks(self, config: Configuration) -> tuple[int, ...]:
        if len(config.assignment) != len(self.specs):
            raise InvalidConfigurationError(f"{config!r} does not cover {self.names}")
        return tuple(spec.rank(config[spec.name]) for spec in self.specs)

    def from_ranks(self, ranks: Sequence[int]) -> Configuration:
        return Configuration(
            tuple((spec.name, spec.states[r].label) for spec, r in zip(self.specs, ranks, strict=True))
        )

    def index(self, config: Configuration) -> int:
        return int(np.ravel_multi_index(self.ranks(config), self.shape))

    def config_at(self, index: int) -> Configuration:
        if not 0 <= index < self.size:
            raise InvalidConfigurationError(f"grid index {index} out of range")
        return self.from_ranks(np.unravel_index(index, self.shape))

    def numeric(self, config: Configuration, name: str) -> float:
        state = self.spec(name).state(config[name])
        if state.numeric is None:
            raise ThresholdEvaluationError(f"state {state.label!r} of {name!r} has no numeric value")
        return state.numeric

    def midpoint(self) -> Configuration:
        """Configuration at the median rank of every parameter (lower median)."""
        return self.from_ranks([(n - 1) // 2 for n in self.shape])

    def label(self, config: Configuration) -> str:
        return ";".join(f"{name}={config[name]}" for name in self.names)

    def parse_label(self, text: str) -> Configuration:
        items = dict(part.split("=", 1) for part in text.split(";") if part)
        return self.config(items)


def enumerate_configs(space: ParameterSpace) -> list[Configuration]:
    """All grid points, lexicographic in parameter order and state rank."""
    return [space.from_ranks(r) for r in itertools.product(*(range(n) for n in space.shape))]


def neighbor_distance(a: Configuration, b: Configuration, space: ParameterSpace) -> int:
    """Manhattan distance between two grid points over ordinal ranks."""
    return sum(abs(x - y) for x, y in zip(space.ranks(a), space.ranks(b)))


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class ScaledReciprocal:
    """``numerator / numeric(parameter)``, e.g. a per-frame time budget of 1000/fps."""

    numerator: float
    parameter: str


ThresholdExpr = Constant | ScaledReciprocal


def evaluate_threshold(expr: ThresholdExpr, config: Configuration, space: ParameterSpace | None = None) -> float:
    if isinstance(expr, Constant):
        return float(expr.value)
    if space is not None:
        value = space.numeric(config, expr.parameter)
    else:
        try:
            value = float(config[expr.parameter])
        except (ValueError, InvalidConfigurationError) as exc:
            raise ThresholdEvaluationError(
                f"cannot read a number for {expr.parameter!r} from {config!r}"
            ) from exc
    if value == 0:
        raise ThresholdEvaluationError(f"{expr.parameter!r} is zero in {config!r}")
    return expr.numerator / value


@dataclass(frozen=True)
class SloSpec:
    name: str
    metric: str
    lower: ThresholdExpr | None = None
    upper: ThresholdExpr | None = None

    def __post_init__(self):
        if self.lower is None and self.upper is None:
            raise ConfigurationError(f"SLO {self.name!r} has no bound")
        if isinstance(self.lower, Constant) and isinstance(self.upper, Constant):
            if self.lower.value > self.upper.value:
                raise ConfigurationError(f"SLO {self.name!r} has lower > upper")

    def bounds(self, config: Configuration, space: ParameterSpace | None = None) -> tuple[float, float]:
        lo = -math.inf if self.lower is None else evaluate_threshold(self.lower, config, space)
        hi = math.inf if self.upper is None else evaluate_threshold(self.upper, config, space)
        return lo, hi


def check_thresholds(slos: Iterable[SloSpec], space: ParameterSpace) -> None:
    """Reject reciprocal thresholds over parameters with zero or missing numeric values."""
    for slo in slos:
        for expr in (slo.lower, slo.upper):
            if isinstance(expr, ScaledReciprocal):
                spec = space.spec(expr.parameter)
                if any(s.numeric in (None, 0) for s in spec.states):
                    raise ConfigurationError(
                        f"SLO {slo.name!r}: every state of {expr.parameter!r} needs a nonzero number"
                    )


@dataclass(frozen=True)
class MetricSample:
    timestamp_ms: int
    values: Mapping[str, float]
    config: Configuration

    def __post_init__(self):
        for name, v in self.values.items():
            if not math.isfinite(v):
                raise ValueError(f"metric {name!r} is not finite: {v}")


@dataclass(frozen=True)
class MetricBatch:
    """Samples from one evaluation window, all under the same configuration."""

    samples: tuple[MetricSample, ...]
    window_ms: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.samples:
            first = self.samples[0].config
            if any(s.config != first for s in self.samples):
                raise InvalidConfigurationError("batch mixes configurations")
            ts = [s.timestamp_ms for s in self.samples]
            if any(b < a for a, b in zip(ts, ts[1:])):
                raise ValueError("batch timestamps must be non-decreasing")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[MetricSample]:
        return iter(self.samples)

    @property
    def config(self) -> Configuration:
        return self.samples[0].config

    @property
    def metrics(self) -> tuple[str, ...]:
        return tuple(self.samples[0].values) if self.samples else ()

    def column(self, metric: str) -> np.ndarray:
        return np.array([s.values[metric] for s in self.samples], dtype=float)

    @classmethod
    def from_arrays(
        cls,
        config: Configuration,
        timestamps: Sequence[int],
        columns: Mapping[str, Sequence[float]],
        window_ms: int = 2000,
    ) -> MetricBatch:
        names = list(columns)
        samples = tuple(
            MetricSample(int(t), {m: float(columns[m][i]) for m in names}, config)
            for i, t in enumerate(timestamps)
        )
        return cls(samples, window_ms)


# -- definitions file ------------------------------------------------------


def _bound_from_json(obj) -> ThresholdExpr | None:
    if obj is None:
        return None
    if "const" in obj:
        return Constant(float(obj["const"]))
    if "reciprocal" in obj:
        r = obj["reciprocal"]
        return ScaledReciprocal(float(r["numerator"]), str(r["parameter"]))
    raise ConfigurationError(f"unrecognised bound {obj!r}")


def _bound_to_json(expr: ThresholdExpr | None):
    if isinstance(expr, Constant):
        return {"const": expr.value}
    return {"reciprocal": {"numerator": expr.numerator, "parameter": expr.parameter}}


def space_from_json(items: Sequence[Mapping]) -> ParameterSpace:
    specs = []
    for p in items:
        states = tuple(
            ParameterState(str(s["label"]), None if s.get("numeric") is None else float(s["numeric"]))
            for s in p["states"]
        )
        specs.append(ParameterSpec(str(p["name"]), states))
    return ParameterSpace(tuple(specs))


def space_to_json(space: ParameterSpace) -> list[dict]:
    out = []
    for spec in space.specs:
        states = []
        for s in spec.states:
            entry = {"label": s.label}
            if s.numeric is not None:
                entry["numeric"] = s.numeric
            states.append(entry)
        out.append({"name": spec.name, "states": states})
    return out


def slos_from_json(items: Sequence[Mapping]) -> tuple[SloSpec, ...]:
    return tuple(
        SloSpec(
            str(s["name"]),
            str(s["metric"]),
            _bound_from_json(s.get("lower")),
            _bound_from_json(s.get("upper")),
        )
        for s in items
    )


def slos_to_json(slos: Iterable[SloSpec]) -> list[dict]:
    out = []
    for slo in slos:
        entry: dict = {"name": slo.name, "metric": slo.metric}
        if slo.lower is not None:
            entry["lower"] = _bound_to_json(slo.lower)
        if slo.upper is not None:
            entry["upper"] = _bound_to_json(slo.upper)
        out.append(entry)
    return out


def load_definitions(source: str | Path | Mapping) -> tuple[ParameterSpace, tuple[SloSpec, ...]]:
    """Read ``{parameters: [...], slos: [...]}`` from a JSON file or an already parsed dict."""
    if isinstance(source, Mapping):
        doc = source
    else:
        doc = json.loads(Path(source).read_text())
    try:
        space = space_from_json(doc["parameters"])
        slos = slos_from_json(doc["slos"])
    except KeyError as exc:
        raise ConfigurationError(f"definitions missing field {exc}") from exc
    check_thresholds(slos, space)
    return space, slos


def dump_definitions(space: ParameterSpace, slos: Iterable[SloSpec]) -> dict:
    return {"parameters": space_to_json(space), "slos": slos_to_json(slos)}


# -- metric CSV ------------------------------------------------------------


def _fmt_value(v: float) -> str:
    return repr(float(v))


def batches_to_csv(batches: Iterable[MetricBatch], space: ParameterSpace, metrics: Sequence[str] | None = None) -> str:
    batches = list(batches)
    if metrics is None:
        metrics = next((b.metrics for b in batches if len(b)), ())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestamp_ms", *space.names, *metrics])
    for batch in batches:
        for s in batch:
            writer.writerow(
                [s.timestamp_ms, *(s.config[n] for n in space.names), *(_fmt_value(s.values[m]) for m in metrics)]
            )
    return buf.getvalue()


def write_batches_csv(path: str | Path, batches: Iterable[MetricBatch], space: ParameterSpace,
                      metrics: Sequence[str] | None = None) -> None:
    Path(path).write_text(batches_to_csv(batches, space, metrics))


def read_samples_csv(path: str | Path, space: ParameterSpace) -> list[MetricSample]:
    """Parse a metric CSV back into samples; raises ``ValueError`` with row context on bad input."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if not header or header[0] != "timestamp_ms":
            raise ValueError(f"{path}: first column must be timestamp_ms")
        missing = [n for n in space.names if n not in header]
        if missing:
            raise ValueError(f"{path}: missing parameter columns {missing}")
        param_idx = {n: header.index(n) for n in space.names}
        metric_cols = [(i, h) for i, h in enumerate(header[1:], start=1) if h not in param_idx]
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                config = space.config({n: row[i] for n, i in param_idx.items()})
                values = {h: float(row[i]) for i, h in metric_cols}
                samples.append(MetricSample(int(row[0]), values, config))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
        return samples
