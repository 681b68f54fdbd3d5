"""Objective functions and analytic gradients for modality-dependent projections.

For images ``X`` (n x p), texts ``T`` (n x q) and one-hot semantics ``S``
(n x c), a projection pair ``(V, W)`` with ``V`` c x p and ``W`` c x q is
scored by::

    lam * ||X V^T - T W^T||^2                       correlation
  + (1 - lam) * ||X V^T - S||^2     (i2t, unified)  image regression
  + (1 - lam) * ||T W^T - S||^2     (t2i, unified)  text regression
  + eta1 * ||V||^2 + eta2 * ||W||^2                 ridge penalty

All norms are Frobenius. The three tasks differ only in which regression
terms are active, so one implementation covers them all.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np


class Task(str, enum.Enum):
    I2T = "i2t"
    T2I = "t2i"
    UNIFIED = "unified"

    @classmethod
    def parse(cls, value) -> "Task":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown task {value!r}; expected one of i2t, t2i, unified") from None

    @property
    def regression_weights(self) -> Tuple[bool, bool]:
        """Whether the (image, text) regression terms are active."""
        return {Task.I2T: (True, False), Task.T2I: (False, True), Task.UNIFIED: (True, True)}[self]


@dataclass(frozen=True)
class Hyperparams:
    lam: float = 0.5
    eta1: float = 0.5
    eta2: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.eta1 < 0 or self.eta2 < 0:
            raise ValueError(f"eta1 and eta2 must be nonnegative, got {self.eta1}, {self.eta2}")


@dataclass
class ProjectionPair:
    V: np.ndarray
    W: np.ndarray
    task: Task = Task.I2T

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=np.float64)
        self.W = np.asarray(self.W, dtype=np.float64)
        self.task = Task.parse(self.task)
        if self.V.ndim != 2 or self.W.ndim != 2:
            raise ValueError("V and W must be 2-D")
        if self.V.shape[0] != self.W.shape[0]:
            raise ValueError(f"V has {self.V.shape[0]} rows but W has {self.W.shape[0]}")
        if not (np.all(np.isfinite(self.V)) and np.all(np.isfinite(self.W))):
            raise ValueError("projection matrices contain non-finite entries")

    @property
    def n_classes(self) -> int:
        return self.V.shape[0]

    @classmethod
    def zeros(cls, c: int, p: int, q: int, task=Task.I2T) -> "ProjectionPair":
        return cls(np.zeros((c, p)), np.zeros((c, q)), task)


def _sqnorm(a: np.ndarray) -> float:
    # sum of squared entries, never a squared root
    return float(np.einsum("ij,ij->", a, a))


class TaskObjective:
    """Objective for one task bound to a fixed training set.

    Gram matrices that do not depend on ``(V, W)`` are computed once here, so
    each gradient evaluation costs O(c (p + q)^2) regardless of n.
    """

    def __init__(self, X, T, S, task=Task.I2T, hp: Hyperparams = Hyperparams()):
        self.X = np.asarray(X, dtype=np.float64)
        self.T = np.asarray(T, dtype=np.float64)
        self.S = np.asarray(S, dtype=np.float64)
        if not (self.X.ndim == self.T.ndim == self.S.ndim == 2):
            raise ValueError("X, T and S must be 2-D")
        n = self.X.shape[0]
        if self.T.shape[0] != n or self.S.shape[0] != n:
            raise ValueError(
                f"row counts differ: X {self.X.shape[0]}, T {self.T.shape[0]}, S {self.S.shape[0]}"
            )
        self.task = Task.parse(task)
        self.hp = hp
        self.XtX = self.X.T @ self.X
        self.TtT = self.T.T @ self.T
        self.XtT = self.X.T @ self.T
        self.StX = self.S.T @ self.X
        self.StT = self.S.T @ self.T

    @property
    def shape(self) -> Tuple[int, int, int]:
        """(c, p, q)"""
        return self.S.shape[1], self.X.shape[1], self.T.shape[1]

    def _check(self, V: np.ndarray, W: np.ndarray) -> None:
        c, p, q = self.shape
        if V.shape != (c, p):
            raise ValueError(f"V has shape {V.shape}, expected {(c, p)}")
        if W.shape != (c, q):
            raise ValueError(f"W has shape {W.shape}, expected {(c, q)}")

    def _weights(self) -> Tuple[float, float]:
        img, txt = self.task.regression_weights
        a = 1.0 - self.hp.lam
        return (a if img else 0.0), (a if txt else 0.0)

    def terms(self, V, W) -> Dict[str, float]:
        """Unweighted squared norms of every term, evaluated from residuals."""
        V = np.asarray(V, dtype=np.float64)
        W = np.asarray(W, dtype=np.float64)
        self._check(V, W)
        XV = self.X @ V.T
        TW = self.T @ W.T
        return {
            "correlation": _sqnorm(XV - TW),
            "image_regression": _sqnorm(XV - self.S),
            "text_regression": _sqnorm(TW - self.S),
            "V": _sqnorm(V),
            "W": _sqnorm(W),
        }

    def value(self, V, W) -> float:
        t = self.terms(V, W)
        a_img, a_txt = self._weights()
        hp = self.hp
        return (
            hp.lam * t["correlation"]
            + a_img * t["image_regression"]
            + a_txt * t["text_regression"]
            + hp.eta1 * t["V"]
            + hp.eta2 * t["W"]
        )

    def grad_V(self, V, W) -> np.ndarray:
        lam, eta1 = self.hp.lam, self.hp.eta1
        a_img, _ = self._weights()
        return 2.0 * ((lam + a_img) * (V @ self.XtX) - lam * (W @ self.XtT.T) - a_img * self.StX + eta1 * V)

    def grad_W(self, V, W) -> np.ndarray:
        lam, eta2 = self.hp.lam, self.hp.eta2
        _, a_txt = self._weights()
        return 2.0 * ((lam + a_txt) * (W @ self.TtT) - lam * (V @ self.XtT) - a_txt * self.StT + eta2 * W)

    def gradient(self, V, W) -> Tuple[np.ndarray, np.ndarray]:
        V = np.asarray(V, dtype=np.float64)
        W = np.asarray(W, dtype=np.float64)
        self._check(V, W)
        return self.grad_V(V, W), self.grad_W(V, W)


def objective_value(pp: ProjectionPair, obj: TaskObjective) -> float:
    return obj.value(pp.V, pp.W)


def gradient(pp: ProjectionPair, obj: TaskObjective) -> Tuple[np.ndarray, np.ndarray]:
    return obj.gradient(pp.V, pp.W)


def task_symmetry_check(V, W, X, T, S, hp: Hyperparams, swap_etas: bool = True, rtol: float = 1e-10) -> bool:
    """Is the i2t objective equal to the t2i objective with the modalities swapped?

    ``swap_etas=False`` keeps ``eta1``/``eta2`` in place, which breaks the
    identity whenever they differ.
    """
    f_i2t = TaskObjective(X, T, S, Task.I2T, hp).value(V, W)
    hp_swapped = Hyperparams(hp.lam, hp.eta2, hp.eta1) if swap_etas else hp
    f_t2i = TaskObjective(T, X, S, Task.T2I, hp_swapped).value(W, V)
    return abs(f_i2t - f_t2i) <= rtol * max(abs(f_i2t), abs(f_t2i), np.finfo(float).tiny)


@dataclass
class GradCheckResult:
    max_rel_error: float
    block: str
    index: Tuple[int, int]
    analytic: float
    numeric: float

    def passed(self, tol: float) -> bool:
        return self.max_rel_error <= tol


def finite_difference_gradient(f: Callable[[np.ndarray], float], A: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``f`` with respect to every entry of ``A``."""
    A = np.array(A, dtype=np.float64)
    G = np.empty_like(A)
    for idx in np.ndindex(*A.shape):
        orig = A[idx]
        A[idx] = orig + h
        fp = f(A)
        A[idx] = orig - h
        fm = f(A)
        A[idx] = orig
        G[idx] = (fp - fm) / (2.0 * h)
    return G


def check_gradient(obj: TaskObjective, V, W, h: float = 1e-6) -> GradCheckResult:
    """Compare analytic gradients with central differences at ``(V, W)``.

    The error of a block is ``max |analytic - numeric|`` divided by the largest
    gradient magnitude in that block (floored at 1e-12), so that tiny
    coordinates do not dominate. The worst block is reported.
    """
    V = np.asarray(V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    dV, dW = obj.gradient(V, W)
    nV = finite_difference_gradient(lambda A: obj.value(A, W), V, h)
    nW = finite_difference_gradient(lambda B: obj.value(V, B), W, h)
    worst = None
    for name, a, b in (("V", dV, nV), ("W", dW, nW)):
        scale = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
        diff = np.abs(a - b)
        idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
        err = float(diff[idx] / scale)
        if worst is None or err > worst.max_rel_error:
            worst = GradCheckResult(err, name, tuple(int(i) for i in idx), float(a[idx]), float(b[idx]))
    return worst
