"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``VENDI_DISABLE_NUMBA=1`` to
force the numpy implementations (also used automatically when numba is not
importable). Both implementations of every kernel stay importable through
``NUMBA_IMPL`` and ``NUMPY_IMPL`` so they can be cross-checked and benchmarked.

Kernel kind codes used by the position-gradient and integrator kernels:
``KIND_NONE`` (no Vendi force), ``KIND_RATIO`` (ratio kernel on the first
coordinate) and ``KIND_RBF`` (Gaussian kernel on all coordinates).
"""

import os

import numpy as np

KIND_NONE = 0
KIND_RATIO = 1
KIND_RBF = 2

# Relative width of the top eigenvalue cluster for order infinity.
TOP_CLUSTER_RTOL = 1e-8
# |q - 1| below this uses the Shannon form.
SHANNON_SWITCH = 1e-8


def _env_disabled():
    return os.environ.get("VENDI_DISABLE_NUMBA", "").strip().lower() in (
        "1", "true", "yes", "on")


try:
    import numba
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False


# ---------------------------------------------------------------------------
# Shared-source kernels: plain numpy code that numba can also compile.
# ---------------------------------------------------------------------------

def _spectral_coefficients(vals, q, support_tol):
    """Per-eigenvalue weights c_i so that d log VS_q / dK~ = U diag(c) U^T.

    ``vals`` must be clamped (non-negative). Returns the weights and a flag
    set when q is infinite and the top eigenvalue is degenerate.
    """
    n = vals.shape[0]
    coef = np.zeros(n)
    lmax = 0.0
    for i in range(n):
        if vals[i] > lmax:
            lmax = vals[i]
    degenerate = False
    if lmax <= 0.0 or q == 0.0:
        return coef, degenerate
    thr = support_tol * lmax
    if np.isinf(q):
        k = 0
        for i in range(n):
            if vals[i] >= lmax * (1.0 - TOP_CLUSTER_RTOL):
                k += 1
        degenerate = k > 1
        for i in range(n):
            if vals[i] >= lmax * (1.0 - TOP_CLUSTER_RTOL):
                coef[i] = -1.0 / (lmax * k)
        return coef, degenerate
    if abs(q - 1.0) < SHANNON_SWITCH:
        for i in range(n):
            if vals[i] > thr:
                coef[i] = -(np.log(vals[i]) + 1.0)
        return coef, degenerate
    # log S = log sum lam^q over the support, then c_i = q lam^(q-1) / ((1-q) S)
    m = -np.inf
    for i in range(n):
        if vals[i] > thr:
            v = q * np.log(vals[i])
            if v > m:
                m = v
    acc = 0.0
    for i in range(n):
        if vals[i] > thr:
            acc += np.exp(q * np.log(vals[i]) - m)
    log_s = m + np.log(acc)
    scale = q / (1.0 - q)
    for i in range(n):
        if vals[i] > thr:
            coef[i] = scale * np.exp((q - 1.0) * np.log(vals[i]) - log_s)
    return coef, degenerate


def _spectral_grad(vals, vecs, q, support_tol):
    coef, degenerate = _spectral_coefficients(vals, q, support_tol)
    g = (vecs * coef) @ vecs.T
    g = 0.5 * (g + g.T)
    return g, degenerate


def _clamp(vals):
    out = vals.copy()
    for i in range(out.shape[0]):
        if out[i] < 0.0:
            out[i] = 0.0
    return out


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _rbf_matrix_np(X, gamma):
    # explicit differences, not the |a|^2 + |b|^2 - 2ab expansion: exact zeros
    # at coincidence matter for the gradient
    diff = X[:, None, :] - X[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    K = np.exp(-gamma * d2)
    K = np.triu(K, 1)
    K = K + K.T
    np.fill_diagonal(K, 1.0)
    return K


def _ratio_matrix_np(x):
    ax = np.abs(x)
    den = ax[:, None] + ax[None, :]
    num = np.abs(x[:, None] - x[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        K = 1.0 - num / den
    K[den == 0.0] = 1.0
    K = np.triu(K, 1)
    K = K + K.T
    np.fill_diagonal(K, 1.0)
    return K


def _ratio_dmatrix_np(x):
    """D[i, j] = d k(x_i, x_j) / d x_i, zero at non-differentiable points."""
    ax = np.abs(x)
    den = ax[:, None] + ax[None, :]
    diff = x[:, None] - x[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        D = -(np.sign(diff) * den - np.abs(diff) * np.sign(x)[:, None]) / den**2
    bad = (diff == 0.0) | (x[:, None] == 0.0) | (den == 0.0)
    D[bad] = 0.0
    return D


def _position_grad_np(X, kind, gamma, q, support_tol):
    R = X.shape[0]
    if kind == KIND_RATIO:
        K = _ratio_matrix_np(X[:, 0])
    else:
        K = _rbf_matrix_np(X, gamma)
    vals, vecs = np.linalg.eigh(K / R)
    G, degenerate = _spectral_grad(_clamp(vals), vecs, q, support_tol)
    out = np.zeros_like(X)
    if kind == KIND_RATIO:
        D = _ratio_dmatrix_np(X[:, 0])
        out[:, 0] = (2.0 / R) * np.sum(G * D, axis=1)
    else:
        W = G * K
        np.fill_diagonal(W, 0.0)
        diff = X[:, None, :] - X[None, :, :]
        out = (-4.0 * gamma / R) * np.einsum("ib,ibk->ik", W, diff)
    return out, degenerate


def _dw_advance_np(pos, noise, t0, dt, nu0, anneal_end, kind, gamma, q,
                   support_tol, a, b, c, stride, rec):
    """Euler-Maruyama steps t0 .. t0+len(noise)-1 for the 2D double well.

    Writes a record into ``rec`` after every step whose global index + 1 is a
    multiple of ``stride``. Returns (records written, first diverged step or
    -1, number of degenerate-force steps).
    """
    nsteps = noise.shape[0]
    s2 = np.sqrt(2.0 * dt)
    r = 0
    degenerate_steps = 0
    # divergence is reported through the return value, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(nsteps):
            t = t0 + s
            x = pos[:, 0]
            grad = np.empty_like(pos)
            grad[:, 0] = a * x**3 + b * x + c
            grad[:, 1] = pos[:, 1]
            drift = -grad
            if kind != KIND_NONE and t < anneal_end:
                nu = nu0 * (1.0 - t / anneal_end)
                f, degenerate = _position_grad_np(pos, kind, gamma, q, support_tol)
                if degenerate:
                    degenerate_steps += 1
                drift = drift + nu * f
            pos += drift * dt + s2 * noise[s]
            if not np.all(np.isfinite(pos)):
                return r, t, degenerate_steps
            if (t + 1) % stride == 0:
                rec[r] = pos
                r += 1
    return r, -1, degenerate_steps


NUMPY_IMPL = {
    "rbf_matrix": _rbf_matrix_np,
    "ratio_matrix": _ratio_matrix_np,
    "ratio_dmatrix": _ratio_dmatrix_np,
    "spectral_grad": _spectral_grad,
    "position_grad": _position_grad_np,
    "dw_advance": _dw_advance_np,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    _clamp_nb = njit(cache=True)(_clamp)
    _spectral_coefficients_nb = njit(cache=True)(_spectral_coefficients)

    @njit(cache=True)
    def _sg_body(vals, vecs, q, tol):
        coef, degenerate = _spectral_coefficients_nb(vals, q, tol)
        g = (vecs * coef) @ vecs.T
        return 0.5 * (g + g.T), degenerate

    @njit(cache=True)
    def _rbf_matrix_nb(X, gamma):
        n, d = X.shape
        K = np.empty((n, n))
        for i in range(n):
            K[i, i] = 1.0
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = X[i, k] - X[j, k]
                    acc += diff * diff
                v = np.exp(-gamma * acc)
                K[i, j] = v
                K[j, i] = v
        return K

    @njit(cache=True)
    def _ratio_matrix_nb(x):
        n = x.shape[0]
        K = np.empty((n, n))
        for i in range(n):
            K[i, i] = 1.0
            for j in range(i + 1, n):
                den = abs(x[i]) + abs(x[j])
                if den == 0.0:
                    v = 1.0
                else:
                    v = 1.0 - abs(x[i] - x[j]) / den
                K[i, j] = v
                K[j, i] = v
        return K

    @njit(cache=True)
    def _ratio_dmatrix_nb(x):
        n = x.shape[0]
        D = np.zeros((n, n))
        for i in range(n):
            a = x[i]
            if a == 0.0:
                continue
            for j in range(n):
                b = x[j]
                diff = a - b
                if diff == 0.0:
                    continue
                den = abs(a) + abs(b)
                D[i, j] = -(np.sign(diff) * den - abs(diff) * np.sign(a)) / (den * den)
        return D

    @njit(cache=True)
    def _position_grad_nb(X, kind, gamma, q, support_tol):
        R, d = X.shape
        if kind == KIND_RATIO:
            K = _ratio_matrix_nb(X[:, 0].copy())
        else:
            K = _rbf_matrix_nb(X, gamma)
        vals, vecs = np.linalg.eigh(K / R)
        G, degenerate = _sg_body(_clamp_nb(vals), vecs, q, support_tol)
        out = np.zeros((R, d))
        if kind == KIND_RATIO:
            D = _ratio_dmatrix_nb(X[:, 0].copy())
            for i in range(R):
                acc = 0.0
                for j in range(R):
                    acc += G[i, j] * D[i, j]
                out[i, 0] = 2.0 * acc / R
        else:
            scale = -4.0 * gamma / R
            for i in range(R):
                for j in range(R):
                    if j == i:
                        continue
                    w = G[i, j] * K[i, j]
                    for k in range(d):
                        out[i, k] += scale * w * (X[i, k] - X[j, k])
        return out, degenerate

    @njit(cache=True)
    def _dw_advance_nb(pos, noise, t0, dt, nu0, anneal_end, kind, gamma, q,
                       support_tol, a, b, c, stride, rec):
        nsteps = noise.shape[0]
        R = pos.shape[0]
        s2 = np.sqrt(2.0 * dt)
        r = 0
        degenerate_steps = 0
        f = np.zeros((R, 2))
        for s in range(nsteps):
            t = t0 + s
            forced = kind != KIND_NONE and t < anneal_end
            nu = 0.0
            if forced:
                nu = nu0 * (1.0 - t / anneal_end)
                f, degenerate = _position_grad_nb(pos, kind, gamma, q, support_tol)
                if degenerate:
                    degenerate_steps += 1
            for i in range(R):
                x = pos[i, 0]
                y = pos[i, 1]
                dx = -(a * x * x * x + b * x + c)
                dy = -y
                if forced:
                    dx += nu * f[i, 0]
                    dy += nu * f[i, 1]
                pos[i, 0] = x + dx * dt + s2 * noise[s, i, 0]
                pos[i, 1] = y + dy * dt + s2 * noise[s, i, 1]
            for i in range(R):
                if not (np.isfinite(pos[i, 0]) and np.isfinite(pos[i, 1])):
                    return r, t, degenerate_steps
            if (t + 1) % stride == 0:
                rec[r] = pos
                r += 1
        return r, -1, degenerate_steps

    NUMBA_IMPL = {
        "rbf_matrix": _rbf_matrix_nb,
        "ratio_matrix": _ratio_matrix_nb,
        "ratio_dmatrix": _ratio_dmatrix_nb,
        "spectral_grad": _sg_body,
        "position_grad": _position_grad_nb,
        "dw_advance": _dw_advance_nb,
    }
else:  # pragma: no cover
    NUMBA_IMPL = None


def _select():
    if HAS_NUMBA and not _env_disabled():
        return "numba", NUMBA_IMPL
    return "numpy", NUMPY_IMPL


BACKEND, _IMPL = _select()

rbf_matrix = _IMPL["rbf_matrix"]
ratio_matrix = _IMPL["ratio_matrix"]
ratio_dmatrix = _IMPL["ratio_dmatrix"]
spectral_grad = _IMPL["spectral_grad"]
position_grad = _IMPL["position_grad"]
dw_advance = _IMPL["dw_advance"]


def set_threads_from_env():
    """Cap numba's thread pool at ``VENDI_THREADS`` when that variable is set."""
    raw = os.environ.get("VENDI_THREADS")
    if not raw or not HAS_NUMBA:
        return None
    n = max(1, min(int(raw), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n
