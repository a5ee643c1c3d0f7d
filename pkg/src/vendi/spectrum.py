"""Trace normalization, clamped eigenvalue spectra and Rayleigh-Ritz bases."""

from dataclasses import dataclass

import numpy as np

DEFAULT_SUPPORT_TOL = 1e-12
DIAGONAL_TOL = 1e-9
SYMMETRY_TOL = 1e-10
ORTHONORMAL_TOL = 1e-10
RANK_RTOL = 1e-10


class SpectrumError(ValueError):
    """Malformed kernel or basis input."""


class IndefiniteKernelError(SpectrumError):
    def __init__(self, eigenvalue, threshold):
        self.eigenvalue = eigenvalue
        self.threshold = threshold
        super().__init__(
            f"kernel matrix is indefinite: eigenvalue {eigenvalue:.6e} is below "
            f"-{threshold:.3e} (support_tol * lambda_max)")


class RankError(SpectrumError):
    """Requested basis size exceeds the numerical rank of the embeddings."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a trace-normalized kernel, sorted descending and clamped.

    ``eigenvectors`` (columns aligned with ``eigenvalues``) is only kept when
    requested, for gradient computations.
    """

    eigenvalues: np.ndarray
    support_tol: float
    support_count: int
    eigenvectors: np.ndarray | None = None

    @property
    def lambda_max(self):
        return float(self.eigenvalues[0])

    @property
    def lambda_min(self):
        return float(self.eigenvalues[-1])

    @property
    def trace(self):
        return float(np.sum(self.eigenvalues))

    @property
    def support(self):
        return self.eigenvalues > self.support_tol * self.eigenvalues[0]


@dataclass(frozen=True)
class ProjectionBasis:
    columns: np.ndarray
    kind: str
    indices: np.ndarray | None = None

    @property
    def m(self):
        return self.columns.shape[1]


def _square_symmetric(K, name="kernel matrix"):
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
        raise SpectrumError(f"{name} must be a non-empty square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise SpectrumError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(K))))
    if np.max(np.abs(K - K.T)) > SYMMETRY_TOL * scale:
        raise SpectrumError(f"{name} is not symmetric")
    return K


def normalize(K) -> np.ndarray:
    """Divide a unit-diagonal kernel matrix by its size so the trace is 1."""
    K = _square_symmetric(K)
    dev = np.max(np.abs(np.diag(K) - 1.0))
    if dev > DIAGONAL_TOL:
        raise SpectrumError(f"kernel diagonal deviates from 1 by {dev:.3e}")
    return K / K.shape[0]


def eigenvalues(Kn, support_tol: float = DEFAULT_SUPPORT_TOL, vectors: bool = False) -> Spectrum:
    """Spectrum of a trace-one symmetric matrix.

    Eigenvalues in ``[-support_tol * lambda_max, 0)`` are clamped to zero;
    anything more negative raises :class:`IndefiniteKernelError`. When clamping
    moves the total by less than 1e-8 the spectrum is rescaled to sum to one.
    """
    if support_tol < 0:
        raise SpectrumError("support_tol must be non-negative")
    Kn = _square_symmetric(Kn, "normalized kernel")
    tr = float(np.trace(Kn))
    if abs(tr - 1.0) > DIAGONAL_TOL:
        raise SpectrumError(f"normalized kernel must have trace 1, got {tr:.12g}")
    Kn = 0.5 * (Kn + Kn.T)
    vals, vecs = np.linalg.eigh(Kn)
    order = np.argsort(vals, kind="stable")[::-1]
    vals = vals[order]
    vecs = vecs[:, order]

    lmax = vals[0]
    if lmax <= 0:
        raise SpectrumError("normalized kernel has no positive eigenvalue")
    thr = support_tol * lmax
    if vals[-1] < -thr:
        raise IndefiniteKernelError(float(vals[-1]), thr)
    neg = vals < 0
    if neg.any():
        before = vals.sum()
        vals = np.where(neg, 0.0, vals)
        if abs(vals.sum() - before) < 1e-8:
            vals = vals / vals.sum()
    count = int(np.count_nonzero(vals > thr))
    return Spectrum(vals, float(support_tol), count, vecs if vectors else None)


def subsample_basis(C: int, m: int, seed: int) -> ProjectionBasis:
    """Indicator columns for ``m`` distinct indices drawn without replacement."""
    if not 1 <= m <= C:
        raise SpectrumError(f"need 1 <= m <= C, got m={m}, C={C}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(C, size=m, replace=False)
    V = np.zeros((C, m))
    V[idx, np.arange(m)] = 1.0
    return ProjectionBasis(V, "subsample", idx)


def orthogonalize_embeddings(E, m: int | None = None) -> ProjectionBasis:
    """Orthonormal basis of the column space of an N x d embedding matrix.

    Column-pivoted Gram-Schmidt with one re-orthogonalization pass per vector.
    At each step the remaining column with the largest residual norm is taken;
    ties go to the lowest index, so already-orthonormal input comes back
    unchanged. The numerical rank is reached when the best residual falls
    below 1e-10 times the largest original column norm. ``m=None`` returns a
    basis of full numerical rank.
    """
    A = np.array(E, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise SpectrumError(f"embeddings must be a non-empty 2-D array, got shape {A.shape}")
    N, d = A.shape
    thresh = RANK_RTOL * float(np.max(np.linalg.norm(A, axis=0)))
    limit = min(N, d)
    if m is not None and not 1 <= m <= limit:
        raise RankError(f"requested m={m} exceeds min(N, d)={limit}")
    want = limit if m is None else m

    Q = np.zeros((N, want))
    used = np.zeros(d, dtype=bool)
    pivots = []
    for j in range(want):
        res = np.linalg.norm(A, axis=0)
        res[used] = -1.0
        best = res.max()
        if best <= thresh:
            if m is None:
                break
            raise RankError(f"requested m={m} exceeds numerical rank {j}")
        p = int(np.flatnonzero(res >= best * (1.0 - 1e-12))[0])
        v = A[:, p] / res[p]
        for _ in range(2):
            v = v - Q[:, :j] @ (Q[:, :j].T @ v)
            v = v / np.linalg.norm(v)
        Q[:, j] = v
        A -= np.outer(v, v @ A)
        used[p] = True
        pivots.append(p)
    Q = Q[:, :len(pivots)]
    return ProjectionBasis(Q, "embedding-orthogonalized", np.array(pivots, dtype=int))


def check_orthonormal(V, tol: float = ORTHONORMAL_TOL):
    V = np.asarray(V, dtype=float)
    err = np.max(np.abs(V.T @ V - np.eye(V.shape[1])))
    if err > tol:
        raise SpectrumError(f"basis columns are not orthonormal (max deviation {err:.3e})")
    return V


def project(Kn, V) -> np.ndarray:
    """Rayleigh-Ritz projection V^T Kn V."""
    cols = V.columns if isinstance(V, ProjectionBasis) else V
    Kn = np.asarray(Kn, dtype=float)
    cols = np.asarray(cols, dtype=float)
    if cols.ndim != 2 or cols.shape[0] != Kn.shape[0]:
        raise SpectrumError(f"basis shape {cols.shape} does not match matrix size {Kn.shape[0]}")
    check_orthonormal(cols)
    P = cols.T @ Kn @ cols
    return 0.5 * (P + P.T)


def ritz_values(P) -> np.ndarray:
    """Eigenvalues of a projected matrix, sorted descending."""
    return np.sort(np.linalg.eigvalsh(0.5 * (P + P.T)))[::-1]


def renormalized_spectrum(P, support_tol: float = DEFAULT_SUPPORT_TOL) -> Spectrum:
    """Spectrum of a projected matrix after rescaling it to unit trace."""
    P = np.asarray(P, dtype=float)
    tr = float(np.trace(P))
    if tr <= 0:
        raise SpectrumError("projected matrix has non-positive trace")
    return eigenvalues(P / tr, support_tol)
