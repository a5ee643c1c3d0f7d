"""Hill numbers and Vendi scores of arbitrary order q."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectrum as sp
from .kernels import Kernel, build_kernel_matrix, UNIT_NORM_TOL

INF = math.inf
# |q - 1| below this uses the Shannon limit.
SHANNON_SWITCH = 1e-8
WEIGHT_SUM_TOL = 1e-8
ABUNDANCE_SUM_TOL = 1e-10


def as_order(q) -> float:
    """Parse an order: a non-negative real, or inf / "inf" / "∞"."""
    if isinstance(q, str):
        s = q.strip().lower()
        if s in ("inf", "infinity", "+inf", "∞"):
            return INF
        try:
            q = float(s)
        except ValueError:
            raise ValueError(f"invalid order {q!r}") from None
    q = float(q)
    if math.isnan(q) or q < 0:
        raise ValueError(f"order must be >= 0, got {q}")
    return q


def format_order(q: float) -> str:
    return "inf" if math.isinf(q) else repr(float(q))


def _log_power_sum(p, q):
    """log sum p_i^q for p on its support."""
    logp = np.log(p)
    if abs(q - 1.0) < 0.5:
        # sum p^q = sum p + sum p (p^(q-1) - 1); the expm1 form keeps digits
        # that logsumexp loses when q is close to 1
        dev = math.fsum(p) - 1.0 + math.fsum(p * np.expm1((q - 1.0) * logp))
        return math.log1p(dev)
    z = q * logp
    zmax = z.max()
    return float(zmax + np.log(np.sum(np.exp(z - zmax))))


def renyi_exponential(weights, q, support_tol: float = 0.0) -> float:
    """Exponential of the order-q Renyi entropy of a probability vector.

    The support is ``weights > support_tol * max(weights)``. q = 0 gives the
    support size, q = 1 the exponential of the Shannon entropy and q = inf the
    reciprocal of the largest weight.
    """
    q = as_order(q)
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a non-empty finite vector")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    wmax = w.max()
    if wmax <= 0:
        raise ValueError("weights are all zero")
    total = math.fsum(w)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1, got {total:.12g}")

    p = w[w > support_tol * wmax]
    if q == 0:
        return float(p.size)
    if math.isinf(q):
        return float(1.0 / wmax)
    if abs(q - 1.0) < SHANNON_SWITCH:
        return float(math.exp(-math.fsum(p * np.log(p))))
    return float(math.exp(_log_power_sum(p, q) / (1.0 - q)))


def hill_number(p, q) -> float:
    """Hill number of an abundance vector (exact-zero support)."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("abundances must be non-negative and finite")
    total = math.fsum(p)
    if abs(total - 1.0) > ABUNDANCE_SUM_TOL:
        raise ValueError(f"abundances must sum to 1 within {ABUNDANCE_SUM_TOL}, got {total:.15g}")
    return renyi_exponential(p, q, support_tol=0.0)


@dataclass(frozen=True)
class ScoreReport:
    q: float
    score: float
    support_count: int
    method: str
    spectrum_summary: tuple  # (lambda_max, lambda_min, trace)
    flags: tuple = field(default_factory=tuple)

    def as_row(self):
        return {
            "q": format_order(self.q),
            "score": repr(self.score),
            "support_count": self.support_count,
            "method": self.method,
        }


def _report(spec: sp.Spectrum, q: float, method: str) -> ScoreReport:
    q = as_order(q)
    score = renyi_exponential(spec.eigenvalues, q, spec.support_tol)
    # rounding guard only: the bounds hold exactly in real arithmetic
    score = min(max(score, 1.0), float(spec.support_count))
    flags = ("uninformative",) if q == 0 else ()
    summary = (spec.lambda_max, spec.lambda_min, spec.trace)
    return ScoreReport(q, score, spec.support_count, method, summary, flags)


def vendi_score_from_spectrum(spectrum: sp.Spectrum, q, method: str = "exact") -> ScoreReport:
    return _report(spectrum, q, method)


def profile_from_spectrum(spectrum: sp.Spectrum, qs, method: str = "exact") -> list:
    qs = [as_order(q) for q in qs]
    if not qs:
        raise ValueError("need at least one order")
    return [_report(spectrum, q, method) for q in qs]


def kernel_spectrum(K, support_tol: float = sp.DEFAULT_SUPPORT_TOL) -> sp.Spectrum:
    """Spectrum of a unit-diagonal kernel matrix."""
    return sp.eigenvalues(sp.normalize(K), support_tol)


def collection_spectrum(items, kernel: Kernel, support_tol: float = sp.DEFAULT_SUPPORT_TOL,
                        subsample: int | None = None, seed: int = 0):
    """Spectrum and method label for a collection, optionally subsampled.

    Subsampling scores the ``subsample`` chosen items as their own collection,
    which equals projecting onto indicator columns and renormalizing by trace.
    """
    items = list(items) if kernel.kind == "shape-color" else np.asarray(items, dtype=float)
    C = len(items)
    if C == 0:
        raise ValueError("collection must be non-empty")
    if subsample is None or subsample == C:
        return kernel_spectrum(build_kernel_matrix(kernel, items), support_tol), "exact"
    basis = sp.subsample_basis(C, subsample, seed)
    idx = np.sort(basis.indices)
    sub = [items[i] for i in idx] if kernel.kind == "shape-color" else items[idx]
    K = build_kernel_matrix(kernel, sub)
    return kernel_spectrum(K, support_tol), f"subsampled({subsample})"


def vendi_score(items, kernel: Kernel, q, support_tol: float = sp.DEFAULT_SUPPORT_TOL,
                subsample: int | None = None, seed: int = 0) -> ScoreReport:
    """Vendi score of order q of a collection under a kernel."""
    spec, method = collection_spectrum(items, kernel, support_tol, subsample, seed)
    return _report(spec, q, method)


def score_profile(items, kernel: Kernel, qs, support_tol: float = sp.DEFAULT_SUPPORT_TOL,
                  subsample: int | None = None, seed: int = 0) -> list:
    """Scores for several orders from a single eigendecomposition.

    Reports come back in the order of ``qs``.
    """
    spec, method = collection_spectrum(items, kernel, support_tol, subsample, seed)
    return profile_from_spectrum(spec, qs, method)


def embedding_spectrum(E, m: int | None = None, support_tol: float = sp.DEFAULT_SUPPORT_TOL):
    """Spectrum of the linear kernel on unit-norm embeddings via projection.

    The basis is an orthonormalized copy of the embedding columns. With
    ``m=None`` it spans the whole range of the kernel and the nonzero spectrum
    is exact; a smaller ``m`` gives Ritz values that are rescaled to unit sum.
    Cost is O(N d m) since ``V^T E E^T V`` never forms the N x N kernel.
    """
    E = np.asarray(E, dtype=float)
    if E.ndim != 2 or E.shape[0] == 0:
        raise ValueError(f"embeddings must be a non-empty N x d array, got shape {E.shape}")
    norms = np.linalg.norm(E, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
    if bad.size:
        raise ValueError(f"embedding row {bad[0]} is not unit-norm (norm {norms[bad[0]]:.6g})")
    N = E.shape[0]
    full = sp.orthogonalize_embeddings(E)
    rank = full.m
    if m is not None and m > rank:
        raise sp.RankError(f"requested m={m} exceeds numerical rank {rank}")
    basis = full if m is None or m == rank else sp.orthogonalize_embeddings(E, m)
    B = basis.columns.T @ E
    P = (B @ B.T) / N
    method = "exact" if basis.m == rank else f"projected({basis.m})"
    return sp.renormalized_spectrum(P, support_tol), method


def vendi_score_from_embeddings(E, q, m: int | None = None,
                                support_tol: float = sp.DEFAULT_SUPPORT_TOL) -> ScoreReport:
    """Vendi score under the linear kernel on unit-norm embedding rows."""
    spec, method = embedding_spectrum(E, m, support_tol)
    return _report(spec, q, method)
