"""Modality-dependent cross-media retrieval: task-specific linear projections of
image and text features into a shared class-label space, with mAP evaluation."""

from .data import (
    PairedDataset,
    build_semantic_matrix,
    load_matrix,
    make_synthetic,
    save_matrix,
    split,
    zscore,
)
from .estimator import ModalityDependentProjection
from .metrics import EvalReport, average_precision, mean_ap, pr_curve
from .objective import Hyperparams, ProjectionPair, Task, TaskObjective, gradient, objective_value
from .optimizer import Model, TrainConfig, TrainReport, default_config, load_model, save_model, train
from .retrieval import RankedResult, cross_retrieve, project, rank

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "Hyperparams",
    "Model",
    "ModalityDependentProjection",
    "PairedDataset",
    "ProjectionPair",
    "RankedResult",
    "Task",
    "TaskObjective",
    "TrainConfig",
    "TrainReport",
    "average_precision",
    "build_semantic_matrix",
    "cross_retrieve",
    "default_config",
    "gradient",
    "load_matrix",
    "load_model",
    "make_synthetic",
    "mean_ap",
    "objective_value",
    "pr_curve",
    "project",
    "rank",
    "save_matrix",
    "save_model",
    "split",
    "train",
    "zscore",
]
