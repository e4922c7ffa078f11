"""Discrete Bayesian network data structures."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from aifedge.errors import SchemaError

FULFILLED = "fulfilled"
VIOLATED = "violated"

ObservationRow = Mapping[str, str]


class VariableKind(str, enum.Enum):
    PARAMETER = "parameter"
    SLO = "slo"


@dataclass(frozen=True)
class VariableDef:
    name: str
    kind: VariableKind
    states: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "kind", VariableKind(self.kind))
        minimum = 2 if self.kind is VariableKind.SLO else 1
        if len(self.states) < minimum:
            raise SchemaError(f"variable {self.name!r} needs at least {minimum} states")
        if len(set(self.states)) != len(self.states):
            raise SchemaError(f"variable {self.name!r} has duplicate states")

    @classmethod
    def slo(cls, name: str) -> VariableDef:
        return cls(name, VariableKind.SLO, (VIOLATED, FULFILLED))

    @classmethod
    def parameter(cls, name: str, states: Sequence[str]) -> VariableDef:
        return cls(name, VariableKind.PARAMETER, tuple(states))

    @property
    def card(self) -> int:
        return len(self.states)

    def code(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise SchemaError(f"{state!r} is not a state of {self.name!r}") from None


def _check_unique(nodes: Sequence[VariableDef]) -> None:
    names = [v.name for v in nodes]
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate variable names in {names}")


@dataclass(frozen=True)
class Dag:
    nodes: tuple[VariableDef, ...]
    edges: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", frozenset((str(a), str(b)) for a, b in self.edges))
        _check_unique(self.nodes)
        kinds = {v.name: v.kind for v in self.nodes}
        for parent, child in self.edges:
            if parent not in kinds or child not in kinds:
                raise SchemaError(f"edge {parent}->{child} references an unknown node")
            if parent == child:
                raise SchemaError(f"self-loop on {parent!r}")
            if kinds[child] is VariableKind.PARAMETER:
                raise SchemaError(f"edge {parent}->{child} points into a parameter node")
        self.topological_order()

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.nodes)

    def variable(self, name: str) -> VariableDef:
        for v in self.nodes:
            if v.name == name:
                return v
        raise SchemaError(f"unknown variable {name!r}")

    def parents(self, name: str) -> tuple[str, ...]:
        """Parents of ``name`` in node order."""
        ps = {a for a, b in self.edges if b == name}
        return tuple(n for n in self.names if n in ps)

    def topological_order(self) -> tuple[str, ...]:
        remaining = {n: set(self.parents(n)) for n in self.names}
        order: list[str] = []
        while remaining:
            ready = [n for n in self.names if n in remaining and not remaining[n]]
            if not ready:
                raise SchemaError(f"graph has a cycle among {sorted(remaining)}")
            for n in ready:
                del remaining[n]
                order.append(n)
            for deps in remaining.values():
                deps.difference_update(ready)
        return tuple(order)

    def with_edges(self, edges: Iterable[tuple[str, str]]) -> Dag:
        return Dag(self.nodes, frozenset(edges))

    def sorted_edges(self) -> list[tuple[str, str]]:
        pos = {n: i for i, n in enumerate(self.names)}
        return sorted(self.edges, key=lambda e: (pos[e[0]], pos[e[1]]))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows of complete observations stored as an ``(N, V)`` array of state codes."""

    variables: tuple[VariableDef, ...]
    codes: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        _check_unique(self.variables)
        codes = np.asarray(self.codes, dtype=np.int64).reshape(-1, len(self.variables))
        cards = np.array([v.card for v in self.variables])
        if codes.size and ((codes < 0).any() or (codes >= cards).any()):
            raise SchemaError("dataset contains state codes outside the variable domains")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    @classmethod
    def empty(cls, variables: Sequence[VariableDef]) -> Dataset:
        return cls(tuple(variables), np.zeros((0, len(variables)), dtype=np.int64))

    @classmethod
    def from_rows(cls, variables: Sequence[VariableDef], rows: Iterable[ObservationRow]) -> Dataset:
        variables = tuple(variables)
        data = []
        for row in rows:
            if set(row) != {v.name for v in variables}:
                raise SchemaError(f"row {dict(row)} does not match variables {[v.name for v in variables]}")
            data.append([v.code(row[v.name]) for v in variables])
        return cls(variables, np.array(data, dtype=np.int64).reshape(-1, len(variables)))

    def __len__(self) -> int:
        return self.codes.shape[0]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"dataset has no variable {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.codes[:, self.column_index(name)]

    def rows(self) -> list[dict[str, str]]:
        return [{v.name: v.states[c] for v, c in zip(self.variables, r)} for r in self.codes]

    def concat(self, other: Dataset) -> Dataset:
        if other.variables != self.variables:
            raise SchemaError("cannot concatenate datasets over different variables")
        return Dataset(self.variables, np.vstack([self.codes, other.codes]))

    def take(self, index) -> Dataset:
        return Dataset(self.variables, self.codes[index])

    def aligned(self, names: Sequence[str]) -> np.ndarray:
        """Codes reordered to ``names`` (columns)."""
        return self.codes[:, [self.column_index(n) for n in names]]


@dataclass(frozen=True, eq=False)
class Cpt:
    """Conditional table of one node; ``table[parent codes..., state]``."""

    node: str
    parent_order: tuple[str, ...]
    table: np.ndarray = field(repr=False)

    def row(self, parent_states: Sequence[int]) -> np.ndarray:
        return self.table[tuple(parent_states)]

    def as_mapping(self, variables: Mapping[str, VariableDef]) -> dict[str, list[float]]:
        parents = [variables[p] for p in self.parent_order]
        out = {}
        for combo in itertools.product(*(range(p.card) for p in parents)):
            key = ",".join(f"{p.name}={p.states[c]}" for p, c in zip(parents, combo))
            out[key] = [float(x) for x in self.table[combo]]
        return out


@dataclass(frozen=True, eq=False)
class GenerativeModel:
    """DAG plus smoothed CPTs; raw counts are kept so the model can be updated incrementally."""

    dag: Dag
    cpts: Mapping[str, Cpt]
    counts: Mapping[str, np.ndarray] = field(repr=False)
    pseudocount: float = 1.0
    trained_on: int = 0

    @property
    def variables(self) -> tuple[VariableDef, ...]:
        return self.dag.nodes

    @property
    def names(self) -> tuple[str, ...]:
        return self.dag.names

    def variable(self, name: str) -> VariableDef:
        return self.dag.variable(name)

    def cpt(self, name: str) -> Cpt:
        try:
            return self.cpts[name]
        except KeyError:
            raise SchemaError(f"model has no variable {name!r}") from None
