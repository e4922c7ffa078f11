"""Exact inference, likelihood scoring and ancestral sampling."""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from aifedge.bayesnet.model import Dataset, GenerativeModel, ObservationRow
from aifedge.errors import EmptyBatchError, SchemaError

_LETTERS = string.ascii_letters


@dataclass(frozen=True, eq=False)
class Factor:
    variables: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def reduce(self, evidence: Mapping[str, int]) -> Factor:
        idx = tuple(evidence.get(v, slice(None)) for v in self.variables)
        kept = tuple(v for v in self.variables if v not in evidence)
        return Factor(kept, self.values[idx])


def _product(factors: Sequence[Factor], keep: Sequence[str]) -> Factor:
    """Multiply ``factors`` and sum out every variable not in ``keep``."""
    letter: dict[str, str] = {}
    for f in factors:
        for v in f.variables:
            letter.setdefault(v, _LETTERS[len(letter)])
    keep = [v for v in keep if v in letter]
    spec = ",".join("".join(letter[v] for v in f.variables) for f in factors)
    spec += "->" + "".join(letter[v] for v in keep)
    return Factor(tuple(keep), np.einsum(spec, *(f.values for f in factors)))


@dataclass(frozen=True, eq=False)
class Distribution:
    """Normalised joint distribution over ``variables``; ``values[codes...]``."""

    variables: tuple[str, ...]
    states: tuple[tuple[str, ...], ...]
    values: np.ndarray = field(repr=False)

    def prob(self, assignment: Mapping[str, str]) -> float:
        idx = tuple(s.index(assignment[v]) for v, s in zip(self.variables, self.states))
        return float(self.values[idx])


def _codes(model: GenerativeModel, assignment: Mapping[str, str]) -> dict[str, int]:
    return {name: model.variable(name).code(state) for name, state in assignment.items()}


def infer(
    model: GenerativeModel,
    query: Iterable[str],
    evidence: Mapping[str, str] | None = None,
) -> Distribution:
    """Posterior over ``query`` given ``evidence`` by variable elimination."""
    query = tuple(query)
    evidence = dict(evidence or {})
    for name in (*query, *evidence):
        model.variable(name)
    if set(query) & set(evidence):
        raise SchemaError("query and evidence overlap")
    if len(set(query)) != len(query):
        raise SchemaError("query lists a variable twice")
    ev = _codes(model, evidence)

    factors = []
    for name in model.names:
        cpt = model.cpt(name)
        factors.append(Factor((*cpt.parent_order, name), cpt.table).reduce(ev))

    hidden = [n for n in model.names if n not in ev and n not in query]
    while hidden:
        # min-neighbour heuristic, ties by node order
        def width(v):
            scope = set()
            for f in factors:
                if v in f.variables:
                    scope.update(f.variables)
            return len(scope)

        var = min(hidden, key=width)
        hidden.remove(var)
        touching = [f for f in factors if var in f.variables]
        rest = [f for f in factors if var not in f.variables]
        scope = []
        for f in touching:
            scope.extend(v for v in f.variables if v != var and v not in scope)
        factors = rest + [_product(touching, scope)]

    joint = _product(factors, query) if factors else Factor((), np.array(1.0))
    values = np.asarray(joint.values, dtype=float)
    total = values.sum()
    if total <= 0:
        raise SchemaError("evidence has zero probability under the model")
    states = tuple(model.variable(q).states for q in query)
    return Distribution(query, states, values / total)


def log_probs(model: GenerativeModel, data: Dataset) -> np.ndarray:
    """Per-row ``ln P(row | model)`` from the DAG factorisation."""
    if set(data.names) != set(model.names):
        raise SchemaError("dataset variables do not match the model")
    total = np.zeros(len(data))
    for name in model.names:
        cpt = model.cpt(name)
        cols = data.aligned([*cpt.parent_order, name])
        total += np.log(cpt.table[tuple(cols.T)])
    return total


def row_surprise(model: GenerativeModel, row: ObservationRow) -> float:
    """Negative log-likelihood of one complete observation."""
    codes = _codes(model, row)
    if set(codes) != set(model.names):
        raise SchemaError("row must assign every model variable")
    logp = 0.0
    for name in model.names:
        cpt = model.cpt(name)
        logp += np.log(cpt.table[tuple(codes[p] for p in (*cpt.parent_order, name))])
    return float(-logp)


def batch_surprise(model: GenerativeModel, rows: Dataset) -> float:
    """Sum of the per-row surprise over a dataset."""
    if len(rows) == 0:
        raise EmptyBatchError("surprise of an empty dataset is undefined")
    return float(-log_probs(model, rows).sum())


def sample_model(model: GenerativeModel, n: int, seed: int = 0) -> Dataset:
    """Ancestral sampling in topological order."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    pos = {name: i for i, name in enumerate(model.names)}
    codes = np.zeros((n, len(pos)), dtype=np.int64)
    for name in model.dag.topological_order():
        cpt = model.cpt(name)
        if cpt.parent_order:
            rows = cpt.table[tuple(codes[:, pos[p]] for p in cpt.parent_order)]
        else:
            rows = np.broadcast_to(cpt.table, (n, cpt.table.shape[-1]))
        u = rng.random(n)
        cdf = np.cumsum(rows, axis=1)
        codes[:, pos[name]] = np.minimum((u[:, None] >= cdf).sum(axis=1), rows.shape[1] - 1)
    return Dataset(model.variables, codes)
