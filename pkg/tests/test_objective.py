import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdcr.objective import (
    Hyperparams,
    ProjectionPair,
    Task,
    TaskObjective,
    check_gradient,
    gradient,
    objective_value,
    task_symmetry_check,
)

from conftest import central_differences, naive_objective, random_instance

REG = {Task.I2T: (1, 0), Task.T2I: (0, 1), Task.UNIFIED: (1, 1)}


def test_zero_projections_leave_only_regression_of_s():
    S = np.eye(2)[[0, 1, 1, 0]]
    X = np.ones((4, 3))
    T = np.ones((4, 2))
    obj = TaskObjective(X, T, S, Task.I2T, Hyperparams(0.5, 0.0, 0.0))
    assert objective_value(ProjectionPair.zeros(2, 3, 2), obj) == 2.0


def test_perfect_correlation_gives_zero():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 3))
    V = rng.standard_normal((2, 3))
    # T = X and W = V make X V^T == T W^T
    obj = TaskObjective(X, X.copy(), np.eye(2)[[0, 1, 0, 1, 0, 1]], Task.I2T, Hyperparams(1.0, 0.0, 0.0))
    assert obj.value(V, V.copy()) == 0.0


@pytest.mark.parametrize("task", list(Task))
def test_value_matches_naive_oracle(task):
    rng = np.random.default_rng(5)
    X, T, S, V, W = random_instance(rng, 5, 3, 2, 2)
    hp = Hyperparams(0.3, 0.7, 0.2)
    got = TaskObjective(X, T, S, task, hp).value(V, W)
    want = naive_objective(V, W, X, T, S, hp.lam, hp.eta1, hp.eta2, *REG[task])
    assert got == pytest.approx(want, rel=1e-12)


def test_dimension_mismatch():
    obj = TaskObjective(np.ones((3, 2)), np.ones((3, 4)), np.eye(2)[[0, 1, 0]])
    with pytest.raises(ValueError, match="V has shape"):
        obj.value(np.zeros((2, 3)), np.zeros((2, 4)))
    with pytest.raises(ValueError, match="W has shape"):
        obj.gradient(np.zeros((2, 2)), np.zeros((3, 4)))
    with pytest.raises(ValueError, match="row counts"):
        TaskObjective(np.ones((3, 2)), np.ones((2, 4)), np.eye(2)[[0, 1, 0]])


def test_hyperparam_validation():
    with pytest.raises(ValueError):
        Hyperparams(1.5, 0, 0)
    with pytest.raises(ValueError):
        Hyperparams(0.5, -1, 0)


def test_gradient_at_zero_i2t():
    rng = np.random.default_rng(2)
    X, T, S, _, _ = random_instance(rng, 7, 4, 3, 3)
    lam = 0.4
    obj = TaskObjective(X, T, S, Task.I2T, Hyperparams(lam, 0.0, 0.3))
    dV, dW = gradient(ProjectionPair.zeros(3, 4, 3), obj)
    np.testing.assert_allclose(dV, -2 * (1 - lam) * S.T @ X, rtol=1e-14)
    assert np.all(dW == 0)


def test_gradient_closed_form_i2t():
    rng = np.random.default_rng(8)
    X, T, S, V, W = random_instance(rng, 6, 4, 3, 2)
    lam, e1, e2 = 0.25, 0.5, 0.75
    obj = TaskObjective(X, T, S, Task.I2T, Hyperparams(lam, e1, e2))
    dV, dW = obj.gradient(V, W)
    np.testing.assert_allclose(dV, 2 * (V @ X.T @ X - lam * W @ T.T @ X - (1 - lam) * S.T @ X + e1 * V), rtol=1e-12)
    np.testing.assert_allclose(dW, 2 * (e2 * W + lam * (W @ T.T @ T - V @ X.T @ T)), rtol=1e-12)


@pytest.mark.parametrize("task", list(Task))
def test_gradient_matches_finite_differences(task):
    rng = np.random.default_rng(11)
    X, T, S, V, W = random_instance(rng, 6, 4, 3, 2)
    obj = TaskObjective(X, T, S, task, Hyperparams(0.6, 0.2, 0.9))
    dV, dW = obj.gradient(V, W)
    nV = central_differences(lambda A: obj.value(A, W), V)
    nW = central_differences(lambda B: obj.value(V, B), W)
    for a, b in ((dV, nV), (dW, nW)):
        assert np.max(np.abs(a - b)) / np.max(np.abs(a)) <= 1e-5


def test_check_gradient_reports_worst_coordinate():
    rng = np.random.default_rng(1)
    X, T, S, V, W = random_instance(rng, 5, 3, 3, 2)
    res = check_gradient(TaskObjective(X, T, S, Task.T2I, Hyperparams()), V, W)
    assert res.passed(1e-5) and not res.passed(1e-15)
    assert res.block in ("V", "W")


def test_check_gradient_catches_wrong_gradient():
    class Broken(TaskObjective):
        def grad_V(self, V, W):
            # first data term without its factor 2
            return super().grad_V(V, W) - V @ self.XtX

    rng = np.random.default_rng(1)
    X, T, S, V, W = random_instance(rng, 5, 3, 3, 2)
    res = check_gradient(Broken(X, T, S, Task.I2T, Hyperparams(0.5, 0.5, 0.5)), V, W)
    assert res.block == "V" and not res.passed(1e-2)


def test_symmetry_examples():
    rng = np.random.default_rng(4)
    X, T, S, V, W = random_instance(rng, 8, 4, 3, 3)
    assert task_symmetry_check(V, W, X, T, S, Hyperparams(0.3, 0.1, 0.8))
    c, p, q = 3, 4, 3
    assert task_symmetry_check(np.zeros((c, p)), np.zeros((c, q)), np.zeros((8, p)), np.zeros((8, q)), S,
                               Hyperparams())
    assert not task_symmetry_check(V, W, X, T, S, Hyperparams(0.3, 0.1, 0.8), swap_etas=False)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 2), st.floats(0, 2))
def test_properties(seed, lam, e1, e2):
    rng = np.random.default_rng(seed)
    X, T, S, V, W = random_instance(rng, 7, 3, 4, 3)
    hp = Hyperparams(lam, e1, e2)
    objs = {t: TaskObjective(X, T, S, t, hp) for t in Task}
    vals = {t: o.value(V, W) for t, o in objs.items()}
    assert all(v >= 0 for v in vals.values())

    terms = objs[Task.I2T].terms(V, W)
    reg = e1 * terms["V"] + e2 * terms["W"]
    # affine in lambda
    for t, o in objs.items():
        f0 = TaskObjective(X, T, S, t, Hyperparams(0.0, e1, e2)).value(V, W) - reg
        f1 = TaskObjective(X, T, S, t, Hyperparams(1.0, e1, e2)).value(V, W) - reg
        assert vals[t] == pytest.approx((1 - lam) * f0 + lam * f1 + reg, rel=1e-10, abs=1e-10)

    # unified = i2t + t2i - correlation - ridge
    combo = vals[Task.I2T] + vals[Task.T2I] - lam * terms["correlation"] - reg
    assert vals[Task.UNIFIED] == pytest.approx(combo, rel=1e-10, abs=1e-10)

    assert task_symmetry_check(V, W, X, T, S, hp)


def test_value_equals_ridge_when_data_terms_vanish():
    # X = T = 0, S unused because lambda = 1 zeros the regression
    S = np.eye(2)[[0, 1]]
    V = np.array([[1.0, 2.0], [0.0, -1.0]])
    W = np.array([[3.0], [1.0]])
    obj = TaskObjective(np.zeros((2, 2)), np.zeros((2, 1)), S, Task.UNIFIED, Hyperparams(1.0, 0.5, 2.0))
    assert obj.value(V, W) == 0.5 * 6.0 + 2.0 * 10.0
