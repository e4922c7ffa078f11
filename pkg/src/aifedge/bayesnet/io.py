"""JSON persistence for generative models and DOT export of their graphs."""

from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np

from aifedge.bayesnet.learning import _model_from_counts
from aifedge.bayesnet.model import Cpt, Dag, GenerativeModel, VariableDef
from aifedge.errors import SchemaError


def model_to_json(model: GenerativeModel) -> dict:
    by_name = {v.name: v for v in model.variables}
    cpts = {}
    for name in model.names:
        cpt = model.cpt(name)
        cpts[name] = {
            "parents": list(cpt.parent_order),
            "table": cpt.as_mapping(by_name),
            "counts": model.counts[name].reshape(-1, by_name[name].card).tolist(),
        }
    return {
        "variables": [{"name": v.name, "kind": v.kind.value, "states": list(v.states)} for v in model.variables],
        "edges": [list(e) for e in model.dag.sorted_edges()],
        "cpts": cpts,
        "pseudocount": model.pseudocount,
        "trained_on": model.trained_on,
    }


def model_from_json(doc: dict) -> GenerativeModel:
    """Rebuild a model; counts are authoritative when present, otherwise tables are taken as-is."""
    try:
        variables = tuple(VariableDef(v["name"], v["kind"], tuple(v["states"])) for v in doc["variables"])
        dag = Dag(variables, frozenset(tuple(e) for e in doc["edges"]))
        pseudocount = float(doc.get("pseudocount", 1.0))
        trained_on = int(doc["trained_on"])
        cpt_docs = doc["cpts"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"model file: bad or missing field ({exc})") from exc

    counts = {}
    tables = {}
    for v in variables:
        if v.name not in cpt_docs:
            raise SchemaError(f"model file: cpts.{v.name} missing")
        entry = cpt_docs[v.name]
        parents = tuple(entry.get("parents", ()))
        if parents != dag.parents(v.name):
            raise SchemaError(f"model file: cpts.{v.name}.parents {list(parents)} disagree with edges")
        shape = (*(dag.variable(p).card for p in parents), v.card)
        if "counts" in entry:
            counts[v.name] = np.asarray(entry["counts"], dtype=np.int64).reshape(shape)
        else:
            table = np.zeros(shape)
            pvars = [dag.variable(p) for p in parents]
            for combo in itertools.product(*(range(p.card) for p in pvars)):
                key = ",".join(f"{p.name}={p.states[c]}" for p, c in zip(pvars, combo))
                try:
                    table[combo] = entry["table"][key]
                except KeyError:
                    raise SchemaError(f"model file: cpts.{v.name}.table lacks row {key!r}") from None
            tables[v.name] = table

    if tables:
        for name, c in counts.items():
            tables[name] = (c + pseudocount) / (c.sum(-1, keepdims=True) + pseudocount * c.shape[-1])
        cpts = {n: Cpt(n, dag.parents(n), tables[n]) for n in dag.names}
        zero = {n: np.zeros(tables[n].shape, dtype=np.int64) for n in dag.names}
        return GenerativeModel(dag, cpts, {**zero, **counts}, pseudocount, trained_on)
    return _model_from_counts(dag, counts, pseudocount, trained_on)


def save_model(model: GenerativeModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model), indent=2) + "\n")


def load_model(path: str | Path) -> GenerativeModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return model_from_json(doc)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def dag_to_dot(dag: Dag, name: str = "generative_model") -> str:
    lines = [f"digraph {name} {{"]
    for v in dag.nodes:
        shape = "box" if v.kind.value == "parameter" else "ellipse"
        lines.append(f'  "{v.name}" [shape={shape}];')
    for a, b in dag.sorted_edges():
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
