"""Experiment driver: runs agents against simulated or replayed services and writes artifacts.

Every experiment writes into its own directory::

    trajectory.csv   one row per decision
    model.json       final generative model
    dag.dot          final graph
    pv.csv, ig.csv   final score matrices as heat maps (one file per state of a
                     third parameter, if any)

A suite additionally writes ``summary.csv`` with one row per experiment.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from aifedge.agent import (
    AgentHyperparams,
    AgentState,
    Decision,
    ScoreMatrix,
    initial_state,
    run_cycle,
    score_matrix,
)
from aifedge.bayesnet import GenerativeModel, VariableKind, dag_to_dot, load_model, save_model
from aifedge.domain import Configuration, MetricBatch, ParameterSpace, enumerate_configs, read_samples_csv
from aifedge.errors import AifEdgeError, ConfigurationError, ReplaySchemaError
from aifedge.sim import DEVICES, SERVICES, Scenario, generate_batch, load_scenario, true_fulfillment, true_optimum

log = logging.getLogger(__name__)

CONVERGENCE_RUN = 5
OPTIMALITY_TOLERANCE = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    service: str
    device: str
    seed: int = 0
    cycles: int = 40
    window_ms: int = 2000
    hyper: AgentHyperparams = field(default_factory=AgentHyperparams)
    out_dir: Path | None = None
    mode: str = "simulate"
    trace: Path | None = None
    profile_dir: Path | None = None

    def __post_init__(self):
        if self.cycles < 1:
            raise ConfigurationError("cycles must be >= 1")
        if self.mode not in ("simulate", "replay"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "replay" and self.trace is None:
            raise ConfigurationError("replay mode needs a trace path")

    @property
    def name(self) -> str:
        return f"{self.service}_{device_slug(self.device)}_s{self.seed}"

    def agent_hyper(self) -> AgentHyperparams:
        return replace(self.hyper, seed=self.seed, window_ms=self.window_ms)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    decisions: list[Decision]
    model: GenerativeModel
    matrix: ScoreMatrix
    space: ParameterSpace
    converged: bool
    converged_at: int | None
    chosen: Configuration
    files: dict[str, Path] = field(default_factory=dict)


@dataclass(frozen=True)
class SummaryRow:
    service: str
    device: str
    chosen_config: str
    final_fulfillment: float
    converged_at: int | None
    optimal_match: bool
    seed: int
    error: str = ""


def device_slug(device: str) -> str:
    return device.replace("+", "plus").replace("-", "minus")


def convergence(
    decisions: Sequence[Decision], run: int = CONVERGENCE_RUN
) -> tuple[bool, int | None, Configuration | None]:
    """Converged when some run of identical consecutive choices is at least ``run`` long.

    Returns the opening cycle and configuration of the latest such run.
    """
    found: tuple[bool, int | None, Configuration | None] = (False, None, None)
    start = 0
    for i in range(1, len(decisions) + 1):
        if i == len(decisions) or decisions[i].chosen != decisions[start].chosen:
            if i - start >= run:
                found = (True, decisions[start].cycle, decisions[start].chosen)
            start = i
    return found


# -- replay ----------------------------------------------------------------


class ReplaySource:
    """Batches cut from a recorded metric trace, served per configuration in recorded order."""

    def __init__(self, path: str | Path, space: ParameterSpace, metrics: Iterable[str], window_ms: int):
        self.path = Path(path)
        try:
            samples = read_samples_csv(self.path, space)
        except (OSError, ValueError) as exc:
            raise ReplaySchemaError(str(exc)) from exc
        if not samples:
            raise ReplaySchemaError(f"{self.path}: trace has no rows")
        missing = [m for m in metrics if m not in samples[0].values]
        if missing:
            raise ReplaySchemaError(f"{self.path}: missing metric columns {missing}")
        self.batches: dict[Configuration, list[MetricBatch]] = {}
        for batch in split_windows(samples, window_ms):
            self.batches.setdefault(batch.config, []).append(batch)
        self._cursor: dict[Configuration, int] = {}

    def next(self, config: Configuration) -> MetricBatch:
        pool = self.batches.get(config)
        if not pool:
            raise ReplaySchemaError(f"{self.path}: no complete window recorded for {config!r}")
        i = self._cursor.get(config, 0)
        self._cursor[config] = i + 1
        return pool[i % len(pool)]


def split_windows(samples: Sequence, window_ms: int) -> list[MetricBatch]:
    """Group samples into ``[k*w, (k+1)*w)`` windows.

    A window counts as complete when its samples span it at their own
    sampling interval (last timestamp >= end - w/n); a trailing window that
    falls short is dropped. Every window must hold a single configuration.
    """
    windows: dict[int, list] = {}
    for s in samples:
        windows.setdefault(s.timestamp_ms // window_ms, []).append(s)
    keys = sorted(windows)
    out = []
    for k in keys:
        group = windows[k]
        if k == keys[-1]:
            end = (k + 1) * window_ms
            if group[-1].timestamp_ms < end - window_ms / len(group):
                continue
        configs = {s.config for s in group}
        if len(configs) > 1:
            raise ReplaySchemaError(f"window starting at {k * window_ms} ms mixes configurations")
        out.append(MetricBatch(tuple(group), window_ms))
    return out


def record_trace(scenario: Scenario, windows_per_config: int, path: str | Path) -> Path:
    """Write a simulated trace visiting every configuration ``windows_per_config`` times."""
    from aifedge.domain import write_batches_csv

    batches = []
    cycle = 0
    for config in enumerate_configs(scenario.space):
        for _ in range(windows_per_config):
            batches.append(generate_batch(scenario, config, cycle))
            cycle += 1
    write_batches_csv(path, batches, scenario.space, scenario.service.metrics)
    return Path(path)


# -- single experiment -----------------------------------------------------


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    scenario = load_scenario(config.service, config.device, config.seed, config.window_ms, config.profile_dir)
    space, slos = scenario.space, scenario.slos
    replay = None
    if config.mode == "replay":
        replay = ReplaySource(config.trace, space, scenario.service.metrics, config.window_ms)

    state: AgentState = initial_state(space, slos, config.agent_hyper())
    decisions = []
    for cycle in range(config.cycles):
        if replay is not None:
            batch = replay.next(state.current)
        else:
            batch = generate_batch(scenario, state.current, cycle)
        state, decision = run_cycle(state, batch)
        decisions.append(decision)

    converged, converged_at, settled = convergence(decisions)
    result = ExperimentResult(
        config=config,
        decisions=decisions,
        model=state.model,
        matrix=score_matrix(state),
        space=space,
        converged=converged,
        converged_at=converged_at,
        chosen=settled if settled is not None else decisions[-1].chosen,
    )
    if config.out_dir is not None:
        result.files = write_artifacts(result, Path(config.out_dir), [s.name for s in slos])
    return result


def _num(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6f}"


def trajectory_csv(decisions: Sequence[Decision], space: ParameterSpace, slo_names: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cycle", *space.names, "pv", "ig", "score", "fulfillment_overall",
                *(f"fulfillment_{n}" for n in slo_names), "rationale"])
    for d in decisions:
        w.writerow([
            d.cycle,
            *(d.chosen[n] for n in space.names),
            _num(d.pv), _num(d.ig), _num(d.score), _num(d.fulfillment_observed),
            *(_num(d.fulfillment_per_slo.get(n, math.nan)) for n in slo_names),
            d.rationale.value,
        ])
    return buf.getvalue()


def heatmap_csvs(matrix: ScoreMatrix, space: ParameterSpace, metric: str) -> dict[str, str]:
    """Heat-map tables keyed by file suffix ('' for 1-2 parameter spaces)."""
    specs = space.specs
    rows_spec = specs[0]
    cols_spec = specs[1] if len(specs) > 1 else None
    extra = specs[2:]

    def table(fixed: dict[str, str]) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([rows_spec.name, *(cols_spec.labels if cols_spec else [metric])])
        for r in rows_spec.labels:
            cells = []
            for c in cols_spec.labels if cols_spec else [None]:
                assign = {rows_spec.name: r, **fixed}
                if cols_spec:
                    assign[cols_spec.name] = c
                entry = matrix[space.config(assign)]
                cells.append(_num(getattr(entry, metric)))
            w.writerow([r, *cells])
        return buf.getvalue()

    if not extra:
        return {"": table({})}
    out = {}
    for config in enumerate_configs(ParameterSpace(tuple(extra))):
        suffix = "_" + "_".join(f"{k}={v}" for k, v in config.assignment)
        out[suffix] = table(config.as_dict())
    return out


def write_artifacts(result: ExperimentResult, out_dir: Path, slo_names: Sequence[str]) -> dict[str, Path]:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise AifEdgeError(f"cannot create output directory {out_dir}: {exc}") from exc
    files = {}
    files["trajectory"] = out_dir / "trajectory.csv"
    files["trajectory"].write_text(trajectory_csv(result.decisions, result.space, slo_names))
    files["model"] = out_dir / "model.json"
    save_model(result.model, files["model"])
    files["dag"] = out_dir / "dag.dot"
    files["dag"].write_text(dag_to_dot(result.model.dag))
    for metric in ("pv", "ig"):
        for suffix, text in heatmap_csvs(result.matrix, result.space, metric).items():
            path = out_dir / f"{metric}{suffix}.csv"
            path.write_text(text)
            files[f"{metric}{suffix}"] = path
    return files


# -- suites ----------------------------------------------------------------


def default_suite(seeds: Iterable[int] = (0,), cycles: int = 40, out_dir: Path | None = None) -> list[ExperimentConfig]:
    configs = []
    for seed in seeds:
        for service in SERVICES:
            for device in DEVICES:
                cfg = ExperimentConfig(service, device, seed=seed, cycles=cycles)
                if out_dir is not None:
                    cfg = replace(cfg, out_dir=Path(out_dir) / cfg.name)
                configs.append(cfg)
    return configs


def summarize(result: ExperimentResult, oracle_n: int = 10_000) -> SummaryRow:
    cfg = result.config
    scenario = load_scenario(cfg.service, cfg.device, cfg.seed, cfg.window_ms, cfg.profile_dir)
    best, best_value = true_optimum(scenario, oracle_n)
    chosen_value = true_fulfillment(scenario, result.chosen, oracle_n)
    match = result.chosen == best or chosen_value >= best_value - OPTIMALITY_TOLERANCE
    return SummaryRow(
        service=cfg.service,
        device=cfg.device,
        chosen_config=result.space.label(result.chosen),
        final_fulfillment=result.decisions[-1].fulfillment_observed,
        converged_at=result.converged_at,
        optimal_match=bool(match),
        seed=cfg.seed,
    )


def _run_and_summarize(config: ExperimentConfig) -> SummaryRow:
    try:
        return summarize(run_experiment(config))
    except (AifEdgeError, OSError, ValueError) as exc:
        log.error("experiment %s failed: %s", config.name, exc)
        return SummaryRow(config.service, config.device, "", math.nan, None, False, config.seed, str(exc))


def run_suite(configs: Sequence[ExperimentConfig], parallelism: int = 1, out_dir: Path | None = None) -> list[SummaryRow]:
    """Run independent experiments, optionally in worker processes; order of rows follows ``configs``."""
    if not configs:
        raise ConfigurationError("suite is empty")
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(_run_and_summarize, configs))
    else:
        rows = [_run_and_summarize(c) for c in configs]
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "summary.csv").write_text(summary_csv(rows))
    return rows


def summary_csv(rows: Iterable[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["service", "device", "chosen_config", "final_fulfillment", "converged_at", "optimal_match", "seed", "error"])
    for r in rows:
        w.writerow([
            r.service, r.device, r.chosen_config, _num(r.final_fulfillment),
            "" if r.converged_at is None else r.converged_at,
            str(r.optimal_match).lower(), r.seed, r.error,
        ])
    return buf.getvalue()


# -- config files ----------------------------------------------------------


def _hyper_from(doc: Mapping | None) -> AgentHyperparams:
    doc = dict(doc or {})
    known = {f for f in AgentHyperparams.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown agent hyperparameters {sorted(unknown)}")
    return AgentHyperparams(**doc)


def experiment_from_json(doc: Mapping, base: Path | None = None) -> ExperimentConfig:
    base = base or Path.cwd()

    def path(value):
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    try:
        return ExperimentConfig(
            service=str(doc["service"]),
            device=str(doc["device"]),
            seed=int(doc.get("seed", 0)),
            cycles=int(doc.get("cycles", 40)),
            window_ms=int(doc.get("window_ms", 2000)),
            hyper=_hyper_from(doc.get("agent")),
            out_dir=path(doc.get("out")),
            mode=str(doc.get("mode", "simulate")),
            trace=path(doc.get("trace")),
            profile_dir=path(doc.get("profile_dir")),
        )
    except KeyError as exc:
        raise ConfigurationError(f"experiment config missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"experiment config: {exc}") from exc


def load_experiment(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return experiment_from_json(_read_json(path), path.parent)


def load_suite(path: str | Path) -> list[ExperimentConfig]:
    """Either ``{"experiments": [...]}`` or a grid ``{"services", "devices", "seeds", ...}``."""
    path = Path(path)
    doc = _read_json(path)
    if "experiments" in doc:
        return [experiment_from_json(e, path.parent) for e in doc["experiments"]]
    shared = {k: v for k, v in doc.items() if k not in ("services", "devices", "seeds")}
    return [
        experiment_from_json({**shared, "service": s, "device": d, "seed": seed}, path.parent)
        for seed in doc.get("seeds", [0])
        for s in doc.get("services", SERVICES)
        for d in doc.get("devices", DEVICES)
    ]


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


# -- inspection ------------------------------------------------------------


def inspect_model(path: str | Path) -> str:
    model = load_model(path)
    lines = [f"model: {path}", f"trained on {model.trained_on} rows, pseudocount {model.pseudocount:g}", "", "variables:"]
    for v in model.variables:
        lines.append(f"  {v.name} ({v.kind.value}): {', '.join(v.states)}")
    lines.append("")
    edges = model.dag.sorted_edges()
    if edges:
        lines.append("edges:")
        lines.extend(f"  {a} -> {b}" for a, b in edges)
    else:
        lines.append("edges: none (no dependencies learned)")
    by_name = {v.name: v for v in model.variables}
    for v in model.variables:
        if v.kind is not VariableKind.SLO:
            continue
        cpt = model.cpt(v.name)
        lines.append("")
        lines.append(f"P({v.name} | {', '.join(cpt.parent_order) or '-'}):")
        for key, probs in cpt.as_mapping(by_name).items():
            cells = "  ".join(f"{s}={p:.4f}" for s, p in zip(v.states, probs))
            lines.append(f"  [{key or '-'}]  {cells}")
    lines.append("")
    lines.append(dag_to_dot(model.dag).rstrip())
    return "\n".join(lines) + "\n"


def worker_count(requested: int) -> int:
    return max(1, min(requested, os.cpu_count() or 1))
