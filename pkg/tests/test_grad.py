import math

import numpy as np
import pytest

from vendi.grad import (check_gradient_fd, grad_log_vs_wrt_kernel, log_vendi_score,
                        vendi_force, vendi_gradient)
from vendi.kernels import Kernel, build_kernel_matrix

from conftest import brute_hill

RBF = Kernel("rbf", gamma=1.0)


def _log_vs_unnormalized(Kt, q):
    """log (sum lam^q)^(1/(1-q)) of the raw eigenvalues; no trace renormalization."""
    lam = np.clip(np.linalg.eigvalsh(Kt), 0, None)
    lam = lam[lam > 1e-12 * lam.max()]
    if q == 1:
        return float(-np.sum(lam * np.log(lam)))
    return float(np.log(np.sum(lam ** q)) / (1 - q))


def test_symmetric_diagonal_case():
    G = grad_log_vs_wrt_kernel([0.5, 0.5], np.eye(2), 2)
    assert G[0, 0] == pytest.approx(G[1, 1], abs=1e-15)


@pytest.mark.parametrize("q", [0.5, 1.0, 1.5, 2.0])
def test_kernel_gradient_matches_entrywise_differences(rng, q):
    A = rng.normal(size=(4, 4))
    Kt = A @ A.T + 0.1 * np.eye(4)
    Kt /= np.trace(Kt)
    vals, vecs = np.linalg.eigh(Kt)
    G = grad_log_vs_wrt_kernel(vals, vecs, q)
    h = 1e-6
    for i in range(4):
        for j in range(i, 4):
            E = np.zeros((4, 4))
            E[i, j] = E[j, i] = 1.0
            fd = (_log_vs_unnormalized(Kt + h * E, q) - _log_vs_unnormalized(Kt - h * E, q)) / (2 * h)
            analytic = G[i, j] * (1 if i == j else 2)
            assert analytic == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_rank_one_gradient_finite():
    Kt = np.ones((5, 5)) / 5
    vals, vecs = np.linalg.eigh(Kt)
    G = grad_log_vs_wrt_kernel(vals, vecs, 1)
    assert np.all(np.isfinite(G))


def test_force_zero_cases():
    X = np.tile([0.3, -0.2], (4, 1))
    np.testing.assert_array_equal(vendi_force(X, RBF, 1, nu=10.0), np.zeros((4, 2)))
    Y = np.array([[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]])
    np.testing.assert_array_equal(vendi_force(Y, RBF, 1, nu=0.0), np.zeros((3, 2)))


def test_three_replicas_line():
    X = np.array([[-1.0], [0.0], [1.0]])
    g = vendi_gradient(X, RBF, 1).position_gradients
    h = 1e-5
    fd = np.zeros(3)
    for i in range(3):
        Xp, Xm = X.copy(), X.copy()
        Xp[i] += h
        Xm[i] -= h
        lam_p = np.linalg.eigvalsh(build_kernel_matrix(RBF, Xp) / 3)
        lam_m = np.linalg.eigvalsh(build_kernel_matrix(RBF, Xm) / 3)
        fd[i] = (math.log(brute_hill(lam_p, 1)) - math.log(brute_hill(lam_m, 1))) / (2 * h)
    assert np.max(np.abs(g[:, 0] - fd)) / np.max(np.abs(fd)) < 1e-5
    # outer replicas are pushed outward, the middle one is balanced
    assert g[0, 0] < 0 < g[2, 0] and abs(g[1, 0]) < 1e-12


def test_fd_check_orders(rng):
    X = rng.normal(size=(6, 2))
    assert check_gradient_fd(X, RBF, 0.5, h=1e-5) < 1e-5
    assert check_gradient_fd(X, RBF, math.inf, h=1e-5) < 1e-4
    x = rng.uniform(-2, 2, size=(6, 1))
    assert check_gradient_fd(x, Kernel("ratio1d"), 1.0, h=1e-6) < 1e-5


def test_fd_check_skips_degenerate_top():
    X = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]])
    assert math.isnan(check_gradient_fd(X, RBF, math.inf))


def test_translation_invariance(rng):
    X = rng.normal(size=(7, 2))
    for q in (0.5, 1.0, 2.0, math.inf):
        g = vendi_gradient(X, RBF, q).position_gradients
        assert np.max(np.abs(g.sum(axis=0))) < 1e-8


def test_gradient_ascends_score(rng):
    X = rng.normal(size=(5, 2)) * 0.3
    g = vendi_gradient(X, RBF, 1).position_gradients
    assert log_vendi_score(X + 1e-3 * g, RBF, 1) > log_vendi_score(X, RBF, 1)


def test_degenerate_top_flagged():
    X = np.array([[0.0, 0.0], [50.0, 0.0], [0.0, 50.0]])
    assert vendi_gradient(X, RBF, math.inf).degenerate_top
