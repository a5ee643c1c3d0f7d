import numpy as np
import pytest


def block_kernel(mults):
    """Kernel with all-ones blocks of the given sizes and zeros elsewhere."""
    C = sum(mults)
    K = np.zeros((C, C))
    start = 0
    for m in mults:
        K[start:start + m, start:start + m] = 1.0
        start += m
    return K


def brute_hill(p, q):
    """Hill number straight from the textbook formula, one branch per case."""
    p = np.asarray([x for x in p if x > 0], dtype=float)
    if q == 0:
        return float(len(p))
    if q == np.inf:
        return float(1 / p.max())
    if q == 1:
        return float(np.exp(-np.sum(p * np.log(p))))
    return float(np.sum(p ** q) ** (1 / (1 - q)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def mp_log_vs_rbf(X, q, gamma=1.0, support_tol=1e-12, dps=40):
    """log VS_q of an rbf collection with kernel and eigenvalues in mpmath."""
    import mpmath as mp
    with mp.workdps(dps):
        R = len(X)
        K = mp.matrix(R, R)
        for i in range(R):
            for j in range(R):
                d2 = sum((mp.mpf(a) - mp.mpf(b)) ** 2 for a, b in zip(X[i], X[j]))
                K[i, j] = mp.exp(-gamma * d2) / R
        lam = list(mp.eigsy(K, eigvals_only=True))
        top = max(lam)
        lam = [v for v in lam if v > support_tol * top]
        if q == float("inf"):
            return -mp.log(top)
        if q == 1:
            return -mp.fsum(v * mp.log(v) for v in lam)
        return mp.log(mp.fsum(v ** q for v in lam)) / (1 - q)


def mp_central_fd_rbf(X, q, gamma=1.0, h="1e-15", dps=40):
    """Central differences of log VS_q, free of double-precision roundoff."""
    import mpmath as mp
    with mp.workdps(dps):
        h = mp.mpf(h)
        base = [[mp.mpf(float(v)) for v in row] for row in X]
        out = np.zeros(np.shape(X))
        for i, a in np.ndindex(*out.shape):
            plus = [r[:] for r in base]
            minus = [r[:] for r in base]
            plus[i][a] += h
            minus[i][a] -= h
            diff = mp_log_vs_rbf(plus, q, gamma, dps=dps) - mp_log_vs_rbf(minus, q, gamma, dps=dps)
            out[i, a] = float(diff / (2 * h))
        return out
