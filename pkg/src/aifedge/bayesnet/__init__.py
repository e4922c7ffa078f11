"""Discrete Bayesian networks: learning, inference and scoring."""

from aifedge.bayesnet.discretize import discretize_batch, network_variables
from aifedge.bayesnet.inference import (
    Distribution,
    batch_surprise,
    infer,
    log_probs,
    row_surprise,
    sample_model,
)
from aifedge.bayesnet.io import dag_to_dot, load_model, model_from_json, model_to_json, save_model
from aifedge.bayesnet.learning import (
    bic_score,
    default_blacklist,
    fit_parameters,
    learn_structure,
    model_from_tables,
    uniform_model,
    update_parameters,
)
from aifedge.bayesnet.model import (
    FULFILLED,
    VIOLATED,
    Cpt,
    Dag,
    Dataset,
    GenerativeModel,
    VariableDef,
    VariableKind,
)

__all__ = [
    "FULFILLED", "VIOLATED", "Cpt", "Dag", "Dataset", "Distribution", "GenerativeModel",
    "VariableDef", "VariableKind", "batch_surprise", "bic_score", "dag_to_dot",
    "default_blacklist", "discretize_batch", "fit_parameters", "infer", "learn_structure",
    "load_model", "log_probs", "model_from_json", "model_from_tables", "model_to_json", "network_variables",
    "row_surprise", "sample_model", "save_model", "uniform_model", "update_parameters",
]
