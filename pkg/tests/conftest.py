import numpy as np
import pytest

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def naive_objective(V, W, X, T, S, lam, eta1, eta2, image_reg, text_reg):
    """Term-by-term evaluation with explicit loops, no matrix products."""
    n, p = X.shape
    q = T.shape[1]
    c = S.shape[1]
    corr = img = txt = 0.0
    for i in range(n):
        for k in range(c):
            xv = sum(X[i, j] * V[k, j] for j in range(p))
            tw = sum(T[i, j] * W[k, j] for j in range(q))
            corr += (xv - tw) ** 2
            img += (xv - S[i, k]) ** 2
            txt += (tw - S[i, k]) ** 2
    reg = eta1 * sum(v * v for v in V.ravel()) + eta2 * sum(w * w for w in W.ravel())
    return lam * corr + (1 - lam) * (img * image_reg + txt * text_reg) + reg


def central_differences(f, A, h=1e-6):
    A = np.array(A, dtype=float)
    G = np.zeros_like(A)
    for idx in np.ndindex(*A.shape):
        E = np.zeros_like(A)
        E[idx] = h
        G[idx] = (f(A + E) - f(A - E)) / (2 * h)
    return G


def random_instance(rng, n, p, q, c):
    X = rng.uniform(-1, 1, (n, p))
    T = rng.uniform(-1, 1, (n, q))
    labels = rng.integers(0, c, n)
    S = np.eye(c)[labels]
    V = rng.uniform(-1, 1, (c, p))
    W = rng.uniform(-1, 1, (c, q))
    return X, T, S, V, W


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{status}] criterion {key}: {detail}")
