"""Analytic gradients of log VS_q and the Vendi force.

For a trace-one kernel with eigendecomposition U diag(lam) U^T the gradient of
log VS_q with respect to its entries is U diag(c) U^T with

    q not in {0, 1, inf}:  c_i = q lam_i^(q-1) / ((1 - q) sum_j lam_j^q)
    q = 1:                 c_i = -(log lam_i + 1)
    q = inf:               c_i = -1 / lam_max on the top eigenvector

restricted to the support. Positions enter through K~ = K / C, so

    d log VS / d x_i = (2 / C) sum_{b != i} G_ib  d k(x_i, x_b) / d x_i.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .kernels import Kernel, KernelError, build_kernel_matrix
from .scores import as_order, renyi_exponential
from .spectrum import DEFAULT_SUPPORT_TOL, eigenvalues, normalize

logger = logging.getLogger(__name__)

_KIND_CODES = {"ratio1d": _accel.KIND_RATIO, "rbf": _accel.KIND_RBF}


@dataclass(frozen=True)
class GradientReport:
    dlog_dK: np.ndarray
    position_gradients: np.ndarray
    q: float
    degenerate_top: bool = False


def grad_log_vs_wrt_kernel(eigenvalues_, eigenvectors, q, support_tol=DEFAULT_SUPPORT_TOL):
    """d log VS_q / d K~ from an eigendecomposition of the normalized kernel.

    Negative eigenvalues are clamped to zero. For q = inf with a degenerate
    top eigenvalue the average projector onto the top eigenspace is used (a
    subgradient) and a warning is logged.
    """
    q = as_order(q)
    vals = np.clip(np.asarray(eigenvalues_, dtype=float), 0.0, None)
    vecs = np.ascontiguousarray(eigenvectors, dtype=float)
    G, degenerate = _accel.spectral_grad(vals, vecs, q, float(support_tol))
    if degenerate:
        logger.warning("top eigenvalue is degenerate; using the eigenspace-averaged subgradient")
    return G


def _kind_code(kernel: Kernel):
    try:
        return _KIND_CODES[kernel.kind]
    except KeyError:
        raise KernelError(f"Vendi force needs a differentiable kernel, got {kernel.kind!r}") from None


def vendi_gradient(positions, kernel: Kernel, q, support_tol=DEFAULT_SUPPORT_TOL) -> GradientReport:
    """Gradient of log VS_q with respect to every replica position.

    For ratio1d only the first coordinate enters the kernel, so the gradient
    of the remaining coordinates is zero.
    """
    q = as_order(q)
    X = np.asarray(positions, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    code = _kind_code(kernel)
    if kernel.kind == "ratio1d":
        K = build_kernel_matrix(kernel, X[:, :1])
    else:
        K = build_kernel_matrix(kernel, X)
    C = K.shape[0]
    vals, vecs = np.linalg.eigh(K / C)
    vals = np.clip(vals, 0.0, None)
    G, degenerate = _accel.spectral_grad(vals, np.ascontiguousarray(vecs), q, float(support_tol))
    pos_grad, _ = _accel.position_grad(np.ascontiguousarray(X), code, float(kernel.gamma), q,
                                       float(support_tol))
    return GradientReport(G, pos_grad, q, bool(degenerate))


def vendi_force(positions, kernel: Kernel, q, nu, support_tol=DEFAULT_SUPPORT_TOL) -> np.ndarray:
    """nu times the gradient of log VS_q with respect to replica positions."""
    X = np.asarray(positions, dtype=float)
    if nu < 0:
        raise ValueError("nu must be non-negative")
    if nu == 0:
        return np.zeros_like(X if X.ndim == 2 else X[:, None])
    if X.ndim == 1:
        X = X[:, None]
    _kind_code(kernel)
    q = as_order(q)
    g, degenerate = _accel.position_grad(np.ascontiguousarray(X), _KIND_CODES[kernel.kind],
                                         float(kernel.gamma), q, float(support_tol))
    if degenerate:
        logger.debug("degenerate top eigenvalue in Vendi force")
    return nu * g


def log_vendi_score(positions, kernel: Kernel, q, support_tol=DEFAULT_SUPPORT_TOL) -> float:
    """log VS_q through the exact scoring path (kernel, normalize, eigvalsh)."""
    X = np.asarray(positions, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    pts = X[:, :1] if kernel.kind == "ratio1d" else X
    spec = eigenvalues(normalize(build_kernel_matrix(kernel, pts)), support_tol)
    return math.log(renyi_exponential(spec.eigenvalues, q, support_tol))


def top_gap(positions, kernel: Kernel) -> float:
    """Relative gap (lam_1 - lam_2) / lam_1 of the normalized kernel."""
    X = np.asarray(positions, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    pts = X[:, :1] if kernel.kind == "ratio1d" else X
    K = build_kernel_matrix(kernel, pts)
    vals = np.sort(np.linalg.eigvalsh(K / K.shape[0]))[::-1]
    if vals.size < 2:
        return 1.0
    return float((vals[0] - vals[1]) / vals[0])


def check_gradient_fd(positions, kernel: Kernel, q, h=1e-5, support_tol=DEFAULT_SUPPORT_TOL,
                      gap_tol=1e-6) -> float:
    """Worst relative error of the analytic gradient against central differences.

    The error is ``max_i |g_i - fd_i| / max(max_i |fd_i|, 1e-10)``. For
    q = inf with a relative top-eigenvalue gap below ``gap_tol`` the check is
    skipped and NaN is returned.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-7, 1e-3]")
    q = as_order(q)
    X = np.array(positions, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if math.isinf(q) and top_gap(X, kernel) < gap_tol:
        logger.warning("near-degenerate top eigenvalue; finite-difference check skipped")
        return math.nan
    analytic = vendi_gradient(X, kernel, q, support_tol).position_gradients
    fd = np.zeros_like(X)
    for idx in np.ndindex(*X.shape):
        Xp = X.copy()
        Xp[idx] += h
        Xm = X.copy()
        Xm[idx] -= h
        fd[idx] = (log_vendi_score(Xp, kernel, q, support_tol)
                   - log_vendi_score(Xm, kernel, q, support_tol)) / (2 * h)
    denom = max(float(np.max(np.abs(fd))), 1e-10)
    return float(np.max(np.abs(analytic - fd)) / denom)
