"""Parameter estimation and score-based structure learning."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from aifedge.bayesnet.model import Cpt, Dag, Dataset, GenerativeModel, VariableKind
from aifedge.errors import SchemaError

_IMPROVEMENT_TOL = 1e-9


def _check_schema(dag: Dag, data: Dataset) -> None:
    if {v.name: v.states for v in dag.nodes} != {v.name: v.states for v in data.variables}:
        raise SchemaError("dataset variables do not match the network variables")


def family_counts(data: Dataset, node: str, parents: Sequence[str]) -> np.ndarray:
    """Counts of ``node`` states for every parent combination, shape ``(*parent cards, card)``."""
    cols = [*parents, node]
    shape = tuple(data.variables[data.column_index(c)].card for c in cols)
    if len(data) == 0:
        return np.zeros(shape, dtype=np.int64)
    flat = np.ravel_multi_index(tuple(data.aligned(cols).T), shape)
    return np.bincount(flat, minlength=math.prod(shape)).reshape(shape)


def smooth(counts: np.ndarray, pseudocount: float) -> np.ndarray:
    card = counts.shape[-1]
    return (counts + pseudocount) / (counts.sum(axis=-1, keepdims=True) + pseudocount * card)


def _model_from_counts(dag: Dag, counts: dict[str, np.ndarray], pseudocount: float, trained_on: int) -> GenerativeModel:
    if pseudocount <= 0:
        raise ValueError("pseudocount must be positive")
    cpts = {n: Cpt(n, dag.parents(n), smooth(counts[n], pseudocount)) for n in dag.names}
    return GenerativeModel(dag, cpts, counts, pseudocount, trained_on)


def fit_parameters(dag: Dag, data: Dataset, pseudocount: float = 1.0) -> GenerativeModel:
    _check_schema(dag, data)
    counts = {n: family_counts(data, n, dag.parents(n)) for n in dag.names}
    return _model_from_counts(dag, counts, pseudocount, len(data))


def update_parameters(model: GenerativeModel, new: Dataset, pseudocount: float | None = None) -> GenerativeModel:
    """Add ``new`` to the sufficient statistics; same result as refitting on all data seen."""
    _check_schema(model.dag, new)
    alpha = model.pseudocount if pseudocount is None else pseudocount
    if len(new) == 0 and alpha == model.pseudocount:
        return model
    counts = {
        n: model.counts[n] + family_counts(new, n, model.dag.parents(n)) for n in model.names
    }
    return _model_from_counts(model.dag, counts, alpha, model.trained_on + len(new))


def uniform_model(dag: Dag, pseudocount: float = 1.0) -> GenerativeModel:
    return fit_parameters(dag, Dataset.empty(dag.nodes), pseudocount)


def family_loglik(counts: np.ndarray) -> float:
    """Maximised log-likelihood of one family from its count table."""
    totals = counts.sum(axis=-1, keepdims=True)
    mask = counts > 0
    ratio = np.divide(counts, totals, out=np.ones(counts.shape), where=totals > 0)
    return float(np.sum(counts[mask] * np.log(ratio[mask])))


class _FamilyScorer:
    def __init__(self, data: Dataset):
        self.data = data
        self.log_n = math.log(len(data)) if len(data) else 0.0
        self._cache: dict[tuple[str, frozenset[str]], float] = {}
        self._order = {n: i for i, n in enumerate(data.names)}

    def __call__(self, node: str, parents: Iterable[str]) -> float:
        key = (node, frozenset(parents))
        if key not in self._cache:
            ps = sorted(key[1], key=self._order.__getitem__)
            counts = family_counts(self.data, node, ps)
            q = math.prod(counts.shape[:-1])
            free = q * (counts.shape[-1] - 1)
            self._cache[key] = family_loglik(counts) - 0.5 * self.log_n * free
        return self._cache[key]


def bic_score(dag: Dag, data: Dataset) -> float:
    """Log-likelihood under ML parameters minus ``ln(N)/2`` per free parameter."""
    _check_schema(dag, data)
    score = _FamilyScorer(data)
    return sum(score(n, dag.parents(n)) for n in dag.names)


def _reaches(edges: set[tuple[str, str]], src: str, dst: str) -> bool:
    stack, seen = [src], {src}
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for a, b in edges:
            if a == u and b not in seen:
                seen.add(b)
                stack.append(b)
    return False


def default_blacklist(variables) -> set[tuple[str, str]]:
    """Every edge that would point into a parameter node."""
    return {
        (a.name, b.name)
        for a in variables
        for b in variables
        if a.name != b.name and b.kind is VariableKind.PARAMETER
    }


def learn_structure(
    data: Dataset,
    blacklist: Iterable[tuple[str, str]] = (),
    max_iter: int = 10_000,
) -> Dag:
    """Greedy hill climbing on BIC from the empty graph.

    Moves are single-edge additions, removals and reversals, visited in
    lexicographic order of the (parent, child) names; the first move that
    improves the score is applied and the scan restarts.
    """
    forbidden = set(blacklist) | default_blacklist(data.variables)
    names = sorted(data.names)
    parents: dict[str, set[str]] = {n: set() for n in names}
    edges: set[tuple[str, str]] = set()
    score = _FamilyScorer(data)

    if len(data) == 0:
        return Dag(data.variables)

    for _ in range(max_iter):
        applied = False
        for a in names:
            for b in names:
                if a == b:
                    continue
                if (a, b) in edges:
                    gain = score(b, parents[b] - {a}) - score(b, parents[b])
                    if gain > _IMPROVEMENT_TOL:
                        edges.discard((a, b))
                        parents[b].discard(a)
                        applied = True
                        break
                    if (b, a) not in forbidden:
                        rest = edges - {(a, b)}
                        if not _reaches(rest, a, b):
                            gain += score(a, parents[a] | {b}) - score(a, parents[a])
                            if gain > _IMPROVEMENT_TOL:
                                edges = rest | {(b, a)}
                                parents[b].discard(a)
                                parents[a].add(b)
                                applied = True
                                break
                elif (b, a) not in edges and (a, b) not in forbidden and not _reaches(edges, b, a):
                    gain = score(b, parents[b] | {a}) - score(b, parents[b])
                    if gain > _IMPROVEMENT_TOL:
                        edges.add((a, b))
                        parents[b].add(a)
                        applied = True
                        break
            if applied:
                break
        if not applied:
            break
    return Dag(data.variables, frozenset(edges))


def model_from_tables(dag: Dag, tables: dict[str, np.ndarray], pseudocount: float = 1.0) -> GenerativeModel:
    """Model with hand-specified CPTs (no counts); tables use ``[parent codes..., state]`` layout."""
    cpts = {}
    for name in dag.names:
        table = np.asarray(tables[name], dtype=float)
        shape = (*(dag.variable(p).card for p in dag.parents(name)), dag.variable(name).card)
        if table.shape != shape:
            raise SchemaError(f"table for {name!r} has shape {table.shape}, expected {shape}")
        if not np.allclose(table.sum(axis=-1), 1.0, atol=1e-9):
            raise SchemaError(f"rows of {name!r} do not sum to 1")
        cpts[name] = Cpt(name, dag.parents(name), table)
    counts = {n: np.zeros(cpts[n].table.shape, dtype=np.int64) for n in dag.names}
    return GenerativeModel(dag, cpts, counts, pseudocount, 0)
