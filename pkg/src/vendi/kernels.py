"""Similarity functions, kernel matrices and kernel position gradients.

Every kernel satisfies k(x, x) = 1, so assembled kernel matrices carry an
exact unit diagonal (written, not computed).

Supported kinds
---------------
linear
    ``a . b`` on unit-norm rows (validated).
cosine
    ``a . b / (|a| |b|)``.
rbf
    ``exp(-gamma |a - b|^2)``.
ratio1d
    ``1 - |a - b| / (|a| + |b|)`` on scalars, with ``k(0, 0) = 1``.
shape-color
    1 for identical tokens, ``partial_match_weight`` when exactly one of shape
    or color agrees, 0 otherwise.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _accel

KINDS = ("linear", "cosine", "rbf", "ratio1d", "shape-color")
DIFFERENTIABLE_KINDS = ("rbf", "ratio1d")

DEFAULT_SHAPES = ("square", "circle", "triangle", "diamond", "star", "hexagon",
                  "cross", "heart", "pentagon", "moon", "arrow", "ring")
DEFAULT_COLORS = ("black", "red", "blue", "yellow", "green", "purple",
                  "orange", "gray", "pink", "brown", "cyan", "white")

# Rows of a linear-kernel input must have unit norm within this tolerance.
UNIT_NORM_TOL = 1e-6


class KernelError(ValueError):
    """Inputs incompatible with the kernel (dimension, category, norm)."""


class ShapeColor(NamedTuple):
    shape: str
    color: str


@dataclass(frozen=True)
class Kernel:
    kind: str
    gamma: float = 1.0
    partial_match_weight: float = 0.5
    shapes: tuple = DEFAULT_SHAPES
    colors: tuple = DEFAULT_COLORS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KernelError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if not self.gamma > 0:
            raise KernelError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.partial_match_weight <= 1.0:
            raise KernelError("partial_match_weight must lie in [0, 1]")

    @property
    def is_vector(self):
        return self.kind != "shape-color"


def _as_vector(kernel, v):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise KernelError(f"expected a vector item, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise KernelError("vector items must be finite")
    if kernel.kind == "ratio1d" and arr.size != 1:
        raise KernelError("ratio1d is defined on scalars only")
    return arr


def _check_token(kernel, tok):
    try:
        shape, color = tok
    except (TypeError, ValueError):
        raise KernelError(f"expected a (shape, color) token, got {tok!r}") from None
    if shape not in kernel.shapes:
        raise KernelError(f"unknown shape {shape!r}")
    if color not in kernel.colors:
        raise KernelError(f"unknown color {color!r}")
    return ShapeColor(shape, color)


def _ratio(a, b):
    den = abs(a) + abs(b)
    if den == 0.0:
        return 1.0
    return 1.0 - abs(a - b) / den


def eval_kernel(kernel: Kernel, a, b) -> float:
    """Similarity between two items."""
    if kernel.kind == "shape-color":
        ta, tb = _check_token(kernel, a), _check_token(kernel, b)
        matches = (ta.shape == tb.shape) + (ta.color == tb.color)
        return (0.0, kernel.partial_match_weight, 1.0)[matches]

    va, vb = _as_vector(kernel, a), _as_vector(kernel, b)
    if va.shape != vb.shape:
        raise KernelError(f"dimension mismatch: {va.size} vs {vb.size}")
    if kernel.kind == "ratio1d":
        return _ratio(float(va[0]), float(vb[0]))
    if kernel.kind == "rbf":
        diff = va - vb
        return float(np.exp(-kernel.gamma * np.dot(diff, diff)))
    if kernel.kind == "linear":
        for v in (va, vb):
            if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
                raise KernelError("linear kernel requires unit-norm items")
        if np.array_equal(va, vb):
            return 1.0
        return float(np.dot(va, vb))
    # cosine
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise KernelError("cosine kernel undefined for zero vectors")
    if np.array_equal(va, vb):
        return 1.0
    return float(np.dot(va, vb) / (na * nb))


def as_points(kernel: Kernel, items) -> np.ndarray:
    """Validate a vector collection and return it as a C x d float array."""
    X = np.asarray(items, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise KernelError(f"expected a non-empty C x d array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise KernelError("vector items must be finite")
    if kernel.kind == "ratio1d" and X.shape[1] != 1:
        raise KernelError("ratio1d is defined on scalars only")
    return X


def _gram(X):
    G = X @ X.T
    G = np.triu(G, 1)
    G = G + G.T
    np.fill_diagonal(G, 1.0)
    return G


def build_kernel_matrix(kernel: Kernel, items: Sequence) -> np.ndarray:
    """C x C kernel matrix with exact symmetry and unit diagonal."""
    if kernel.kind == "shape-color":
        toks = [_check_token(kernel, t) for t in items]
        if not toks:
            raise KernelError("collection must be non-empty")
        s = np.array([kernel.shapes.index(t.shape) for t in toks])
        c = np.array([kernel.colors.index(t.color) for t in toks])
        matches = (s[:, None] == s[None, :]).astype(int) + (c[:, None] == c[None, :])
        K = np.array([0.0, kernel.partial_match_weight, 1.0])[matches]
        np.fill_diagonal(K, 1.0)
        return K

    X = as_points(kernel, items)
    if kernel.kind == "rbf":
        return _accel.rbf_matrix(np.ascontiguousarray(X), float(kernel.gamma))
    if kernel.kind == "ratio1d":
        return _accel.ratio_matrix(np.ascontiguousarray(X[:, 0]))
    if kernel.kind == "linear":
        norms = np.linalg.norm(X, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise KernelError(
                f"linear kernel requires unit-norm rows; row {bad[0]} has norm {norms[bad[0]]:.6g}")
        return _gram(X)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise KernelError("cosine kernel undefined for zero rows")
    return _gram(X / norms[:, None])


def kernel_position_gradient(kernel: Kernel, a, b) -> np.ndarray:
    """Gradient of k(a, b) with respect to ``a``.

    ratio1d returns zero at its non-differentiable points (a == b or a == 0).
    """
    if kernel.kind not in DIFFERENTIABLE_KINDS:
        raise KernelError(f"no position gradient for kernel kind {kernel.kind!r}")
    va, vb = _as_vector(kernel, a), _as_vector(kernel, b)
    if va.shape != vb.shape:
        raise KernelError(f"dimension mismatch: {va.size} vs {vb.size}")
    if kernel.kind == "rbf":
        diff = va - vb
        return -2.0 * kernel.gamma * diff * np.exp(-kernel.gamma * np.dot(diff, diff))
    x, y = float(va[0]), float(vb[0])
    if x == y or x == 0.0:
        return np.zeros(1)
    den = abs(x) + abs(y)
    return np.array([-(np.sign(x - y) * den - abs(x - y) * np.sign(x)) / den**2])
