"""Action-perception cycle of the adaptive streaming agent.

Perception evaluates a metric batch against the SLOs, scores how surprising it
was under the current generative model and folds it into the model. Action
scores every configuration by a weighted sum of pragmatic value (inferred
probability that all SLOs hold, in percent) and information gain (median
surprise of a configuration relative to the global median, in percent), fills
unvisited configurations from their nearest visited neighbours and picks the
maximum.

All step functions are pure: they return a new ``AgentState``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from statistics import median
from typing import Iterable, Mapping

import numpy as np

from aifedge.bayesnet import (
    FULFILLED,
    Dag,
    Dataset,
    GenerativeModel,
    batch_surprise,
    discretize_batch,
    fit_parameters,
    infer,
    learn_structure,
    network_variables,
    uniform_model,
    update_parameters,
)
from aifedge.domain import (
    Configuration,
    MetricBatch,
    ParameterSpace,
    SloSpec,
    enumerate_configs,
)
from aifedge.errors import ColdStartError, DegenerateHistoryError, InvalidConfigurationError
from aifedge.slo import FulfillmentReport, batch_fulfillment

COLD_PV = 50.0
COLD_IG = 100.0


class Provenance(str, enum.Enum):
    OBSERVED = "Observed"
    INTERPOLATED = "Interpolated"
    TIE_BREAK = "TieBreak"


@dataclass(frozen=True)
class AgentHyperparams:
    w_pv: float = 2.0
    w_ig: float = 1.0
    pseudocount: float = 1.0
    # relearning every cycle costs milliseconds here and picks up new
    # dependencies as soon as the data supports them
    structure_relearn_period: int = 1
    window_ms: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.w_pv <= 0 or self.w_ig <= 0:
            raise ValueError("weights must be positive")
        if self.pseudocount <= 0:
            raise ValueError("pseudocount must be positive")
        if self.structure_relearn_period < 1:
            raise ValueError("structure_relearn_period must be >= 1")
        if self.window_ms <= 0:
            raise ValueError("window_ms must be positive")


@dataclass(frozen=True)
class ConfigStats:
    visit_count: int = 0
    surprise_history: tuple[float, ...] = ()
    last_fulfillment: float | None = None


@dataclass(frozen=True)
class ScoreEntry:
    pv: float
    ig: float
    provenance: Provenance


ScoreMatrix = dict[Configuration, ScoreEntry]


@dataclass(frozen=True)
class Decision:
    cycle: int
    chosen: Configuration
    pv: float
    ig: float
    score: float
    fulfillment_observed: float
    rationale: Provenance
    fulfillment_per_slo: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class AgentState:
    model: GenerativeModel
    stats: Mapping[Configuration, ConfigStats]
    current: Configuration
    slos: tuple[SloSpec, ...]
    space: ParameterSpace
    hyper: AgentHyperparams
    data: Dataset
    rng_state: Mapping
    cycle: int = 0
    history: tuple[Decision, ...] = ()
    last_report: FulfillmentReport | None = None

    @property
    def visited(self) -> list[Configuration]:
        return [c for c in enumerate_configs(self.space) if self.stats.get(c, ConfigStats()).visit_count > 0]


def initial_state(
    space: ParameterSpace,
    slos: Iterable[SloSpec],
    hyper: AgentHyperparams | None = None,
    start: Configuration | None = None,
) -> AgentState:
    """Untrained agent; the first configuration defaults to the grid midpoint."""
    hyper = hyper or AgentHyperparams()
    slos = tuple(slos)
    variables = network_variables(space, slos)
    model = uniform_model(Dag(variables), hyper.pseudocount)
    rng = np.random.default_rng(hyper.seed)
    return AgentState(
        model=model,
        stats={},
        current=space.validate(start) if start is not None else space.midpoint(),
        slos=slos,
        space=space,
        hyper=hyper,
        data=Dataset.empty(variables),
        rng_state=rng.bit_generator.state,
    )


# -- scoring ---------------------------------------------------------------


def compute_pv(model: GenerativeModel, config: Configuration, slos: Iterable[SloSpec]) -> float:
    """Percent probability that every SLO holds under ``config``."""
    names = [slo.name for slo in slos]
    dist = infer(model, names, evidence=config.as_dict())
    return 100.0 * dist.prob({n: FULFILLED for n in names})


def pv_table(model: GenerativeModel, space: ParameterSpace, slos: Iterable[SloSpec]) -> np.ndarray:
    """``compute_pv`` for the whole grid from a single joint query, shaped like the grid."""
    names = [slo.name for slo in slos]
    joint = infer(model, [*space.names, *names]).values
    k = len(space.names)
    fulfilled = tuple(model.variable(n).code(FULFILLED) for n in names)
    all_ok = joint[(Ellipsis, *fulfilled)] if names else joint
    marginal = joint.sum(axis=tuple(range(k, joint.ndim)))
    return 100.0 * all_ok / marginal


def compute_ig(stats: Mapping[Configuration, ConfigStats], config: Configuration) -> float:
    """Median surprise of ``config`` relative to the pooled median, in percent."""
    own = stats.get(config)
    if own is None or not own.surprise_history:
        raise ColdStartError(f"{config!r} has no surprise history")
    pooled = [s for st in stats.values() for s in st.surprise_history]
    global_median = median(pooled)
    if global_median <= 0:
        raise DegenerateHistoryError("global median surprise is zero")
    return median(own.surprise_history) / global_median * 100.0


def interpolate_scores(matrix: Mapping[Configuration, ScoreEntry], space: ParameterSpace) -> ScoreMatrix:
    """Fill every unvisited grid point from its nearest observed neighbours.

    The value is the inverse-distance weighted mean over all observed points at
    the minimal Manhattan distance; with a single nearest neighbour its values
    are copied. Observed entries are returned untouched.
    """
    observed = [(c, e) for c, e in matrix.items() if e.provenance is Provenance.OBSERVED]
    if not observed:
        raise ColdStartError("no observed configuration to interpolate from")
    obs_ranks = np.array([space.ranks(c) for c, _ in observed])
    obs_pv = np.array([e.pv for _, e in observed])
    obs_ig = np.array([e.ig for _, e in observed])
    observed_set = {c for c, _ in observed}

    out: ScoreMatrix = {}
    for config in enumerate_configs(space):
        if config in observed_set:
            out[config] = matrix[config]
            continue
        dist = np.abs(obs_ranks - np.array(space.ranks(config))).sum(axis=1)
        nearest = dist == dist.min()
        weights = 1.0 / dist[nearest]
        if nearest.sum() == 1:
            pv, ig = float(obs_pv[nearest][0]), float(obs_ig[nearest][0])
        else:
            pv = float(np.dot(weights, obs_pv[nearest]) / weights.sum())
            ig = float(np.dot(weights, obs_ig[nearest]) / weights.sum())
        out[config] = ScoreEntry(pv, ig, Provenance.INTERPOLATED)
    return out


def _scores(matrix: Mapping[Configuration, ScoreEntry], hyper: AgentHyperparams) -> np.ndarray:
    return np.array([hyper.w_pv * e.pv + hyper.w_ig * e.ig for e in matrix.values()])


def tied_best(matrix: Mapping[Configuration, ScoreEntry], hyper: AgentHyperparams) -> list[Configuration]:
    """All configurations sharing the maximum score (up to float rounding)."""
    scores = _scores(matrix, hyper)
    best = scores.max()
    tol = 1e-9 * max(1.0, abs(best))
    configs = list(matrix)
    return [configs[i] for i in np.flatnonzero(scores >= best - tol)]


def select_action(
    matrix: Mapping[Configuration, ScoreEntry],
    hyper: AgentHyperparams,
    rng: np.random.Generator,
) -> Configuration:
    """Argmax of ``w_pv*pv + w_ig*ig``; ties are broken uniformly with ``rng``."""
    best = tied_best(matrix, hyper)
    if len(best) == 1:
        return best[0]
    return best[int(rng.integers(len(best)))]


def score_matrix(state: AgentState) -> ScoreMatrix:
    """pv and ig for every grid point: inferred/measured where visited, interpolated elsewhere."""
    visited = state.visited
    if not visited:
        return {c: ScoreEntry(COLD_PV, COLD_IG, Provenance.INTERPOLATED) for c in enumerate_configs(state.space)}
    pv_grid = pv_table(state.model, state.space, state.slos)
    partial: ScoreMatrix = {}
    for config in visited:
        pv = float(pv_grid[state.space.ranks(config)])
        try:
            ig = compute_ig(state.stats, config)
        except DegenerateHistoryError:
            ig = COLD_IG
        partial[config] = ScoreEntry(pv, ig, Provenance.OBSERVED)
    return interpolate_scores(partial, state.space)


# -- cycle -----------------------------------------------------------------


def perceive(state: AgentState, batch: MetricBatch) -> AgentState:
    """Evaluate ``batch``, record its surprise and fold it into the model."""
    if len(batch) and batch.config != state.current:
        raise InvalidConfigurationError(f"batch taken under {batch.config!r}, agent is at {state.current!r}")
    report = batch_fulfillment(batch, state.slos, state.space)
    rows = discretize_batch(batch, state.slos, state.space)
    mean_surprise = batch_surprise(state.model, rows) / len(rows)

    data = state.data.concat(rows)
    if state.cycle % state.hyper.structure_relearn_period == 0:
        dag = learn_structure(data)
        model = fit_parameters(dag, data, state.hyper.pseudocount)
    else:
        model = update_parameters(state.model, rows, state.hyper.pseudocount)

    old = state.stats.get(state.current, ConfigStats())
    stats = dict(state.stats)
    stats[state.current] = ConfigStats(
        visit_count=old.visit_count + 1,
        surprise_history=old.surprise_history + (mean_surprise,),
        last_fulfillment=report.overall,
    )
    return replace(state, model=model, stats=stats, data=data, last_report=report)


def act(state: AgentState) -> tuple[AgentState, Decision]:
    """Score the grid, choose the next configuration and log the decision."""
    report = state.last_report
    observed = report.overall if report else math.nan
    per_slo = dict(report.per_slo) if report else {}
    hyper = state.hyper

    if not state.visited:
        chosen = state.space.midpoint()
        pv, ig, rationale = COLD_PV, COLD_IG, Provenance.TIE_BREAK
        rng_state = state.rng_state
    else:
        matrix = score_matrix(state)
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = dict(state.rng_state)
        ties = tied_best(matrix, hyper)
        chosen = select_action(matrix, hyper, rng)
        entry = matrix[chosen]
        pv, ig = entry.pv, entry.ig
        rationale = Provenance.TIE_BREAK if len(ties) > 1 else entry.provenance
        rng_state = rng.bit_generator.state

    decision = Decision(
        cycle=state.cycle + 1,
        chosen=chosen,
        pv=pv,
        ig=ig,
        score=hyper.w_pv * pv + hyper.w_ig * ig,
        fulfillment_observed=observed,
        rationale=rationale,
        fulfillment_per_slo=per_slo,
    )
    new_state = replace(
        state,
        current=chosen,
        cycle=state.cycle + 1,
        history=state.history + (decision,),
        rng_state=rng_state,
    )
    return new_state, decision


def run_cycle(state: AgentState, batch: MetricBatch) -> tuple[AgentState, Decision]:
    return act(perceive(state, batch))
