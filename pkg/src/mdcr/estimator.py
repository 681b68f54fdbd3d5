"""scikit-learn compatible wrapper around the projection learner."""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .data import PairedDataset, ZScoreStats, remap_labels, zscore
from .metrics import EvalReport, mean_ap
from .objective import Hyperparams, ProjectionPair, Task
from .optimizer import Model, TrainConfig, TrainReport, train
from .retrieval import cross_retrieve, project


class ModalityDependentProjection(BaseEstimator):
    """Learn a task-specific pair of linear maps into a class-dimensional space.

    ``fit`` takes paired image rows, text rows and one label per pair. Labels
    may be arbitrary hashables; they are mapped to ``classes_``. After
    fitting, ``transform`` embeds either modality and ``score`` returns the
    retrieval mAP in the direction of ``task`` (unified models default to
    i2t).

    Parameters
    ----------
    task : {'i2t', 't2i', 'unified'}
    lam, eta1, eta2 : float
        Correlation/regression tradeoff and ridge weights on V and W.
    mu, epsilon : float
        Step size and inner-loop improvement threshold.
    step_halving : bool
        Retry rejected steps at half the step size instead of ending the block.
    standardize : bool
        z-score both modalities with training statistics.
    """

    def __init__(
        self,
        task: str = "i2t",
        lam: float = 0.5,
        eta1: float = 0.5,
        eta2: float = 0.5,
        mu: float = 0.02,
        epsilon: float = 1e-4,
        max_outer_iter: int = 100,
        max_inner_iter: int = 500,
        outer_tol: float = 1e-6,
        init: str = "zeros",
        init_scale: float = 0.01,
        step_halving: bool = False,
        standardize: bool = False,
        random_state: int = 0,
    ):
        self.task = task
        self.lam = lam
        self.eta1 = eta1
        self.eta2 = eta2
        self.mu = mu
        self.epsilon = epsilon
        self.max_outer_iter = max_outer_iter
        self.max_inner_iter = max_inner_iter
        self.outer_tol = outer_tol
        self.init = init
        self.init_scale = init_scale
        self.step_halving = step_halving
        self.standardize = standardize
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        return TrainConfig(
            hp=Hyperparams(self.lam, self.eta1, self.eta2),
            mu=self.mu,
            epsilon=self.epsilon,
            max_outer_iter=self.max_outer_iter,
            max_inner_iter=self.max_inner_iter,
            init=self.init,
            init_scale=self.init_scale,
            seed=self.random_state,
            outer_tol=self.outer_tol,
            step_halving=self.step_halving,
        )

    def fit(self, X, T, y):
        X = check_array(X, dtype=np.float64)
        T = check_array(T, dtype=np.float64)
        y = np.asarray(y)
        if not (X.shape[0] == T.shape[0] == y.shape[0]):
            raise ValueError(f"inconsistent sample counts: {X.shape[0]}, {T.shape[0]}, {y.shape[0]}")
        ids, self.classes_ = remap_labels(y)
        self.image_stats_: Optional[ZScoreStats] = None
        self.text_stats_: Optional[ZScoreStats] = None
        if self.standardize:
            X, self.image_stats_ = zscore(X)
            T, self.text_stats_ = zscore(T)
        data = PairedDataset(X, T, ids, len(self.classes_))
        task = Task.parse(self.task)
        self.report_: TrainReport = train(data, task, self._config())
        self.V_ = self.report_.pair.V
        self.W_ = self.report_.pair.W
        self.n_features_image_in_ = X.shape[1]
        self.n_features_text_in_ = T.shape[1]
        return self

    @property
    def pair_(self) -> ProjectionPair:
        check_is_fitted(self, "V_")
        return ProjectionPair(self.V_, self.W_, self.task)

    def to_model(self) -> Model:
        return Model(self.pair_, self._config(), self.image_stats_, self.text_stats_,
                     [c.item() if hasattr(c, "item") else c for c in self.classes_])

    def _prep(self, A, modality: str) -> np.ndarray:
        check_is_fitted(self, "V_")
        A = check_array(A, dtype=np.float64)
        want = self.n_features_image_in_ if modality == "image" else self.n_features_text_in_
        if A.shape[1] != want:
            raise ValueError(f"{modality} features have {A.shape[1]} columns, model expects {want}")
        stats = self.image_stats_ if modality == "image" else self.text_stats_
        if stats is not None:
            A, _ = zscore(A, stats)
        return A

    def transform(self, A, modality: str = "image") -> np.ndarray:
        """Embed rows of ``A`` (image or text features) into the shared space."""
        A = self._prep(A, modality)
        return project(A, self.V_ if modality == "image" else self.W_, modality).points

    def predict(self, A, modality: str = "image") -> np.ndarray:
        """Class whose one-hot target is nearest to each embedded row."""
        return self.classes_[np.argmax(self.transform(A, modality), axis=1)]

    def evaluate(self, X, T, y, direction=None, k: Optional[int] = None) -> EvalReport:
        direction = Task.parse(direction or (self.task if self.task != "unified" else "i2t"))
        ids = np.searchsorted(self.classes_, np.asarray(y))
        if np.any(ids >= len(self.classes_)) or np.any(self.classes_[np.minimum(ids, len(self.classes_) - 1)] != y):
            raise ValueError("labels contain classes unseen during fit")
        Xp = self._prep(X, "image")
        Tp = self._prep(T, "text")
        if direction is Task.I2T:
            results = cross_retrieve(self.pair_, Xp, ids, Tp, ids, direction)
        else:
            results = cross_retrieve(self.pair_, Tp, ids, Xp, ids, direction)
        return mean_ap(results, k=k)

    def score(self, X, T, y, direction=None) -> float:
        return self.evaluate(X, T, y, direction).mAP
