"""Dense numeric kernels used by every other module.

All kernels compute in 64-bit IEEE-754 regardless of input dtype, return
fresh float64 arrays and never mutate their inputs.  Matrices are plain
2-D numpy arrays in row-major layout.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError, DegenerateInputError, ShapeError

# tanh-form gelu constants
_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, raising ShapeError otherwise."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def matmul(a, b) -> np.ndarray:
    """Matrix product of two 2-D arrays with explicit shape checking."""
    am = as_matrix(a, "left operand")
    bm = as_matrix(b, "right operand")
    if am.shape[1] != bm.shape[0]:
        raise ShapeError(
            f"cannot multiply {am.shape[0]}x{am.shape[1]} by {bm.shape[0]}x{bm.shape[1]}"
        )
    return am @ bm


def softmax_rows(m) -> np.ndarray:
    """Row-wise softmax, computed with max-subtraction for stability.

    Every output row is nonnegative and sums to 1 to within 1e-9 even for
    inputs with entries of magnitude ~1e4.
    """
    a = as_matrix(m)
    shifted = a - a.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def layer_norm(m, gamma, beta, eps: float = 1e-5) -> np.ndarray:
    """Per-row normalization to mean 0 / variance 1, then affine gamma*x + beta."""
    a = as_matrix(m)
    g = np.asarray(gamma, dtype=np.float64).ravel()
    b = np.asarray(beta, dtype=np.float64).ravel()
    if g.shape[0] != a.shape[1] or b.shape[0] != a.shape[1]:
        raise ShapeError(
            f"gamma/beta lengths {g.shape[0]}/{b.shape[0]} do not match {a.shape[1]} columns"
        )
    if not eps > 0:
        raise ArgumentError(f"eps must be positive, got {eps}")
    centered = a - a.mean(axis=1, keepdims=True)
    var = (centered * centered).mean(axis=1, keepdims=True)
    return centered / np.sqrt(var + eps) * g + b


def gelu(m) -> np.ndarray:
    """Elementwise gelu: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))."""
    a = np.asarray(m, dtype=np.float64)
    inner = _GELU_C * (a + _GELU_A * a**3)
    return 0.5 * a * (1.0 + np.tanh(inner))


def gelu_grad(m) -> np.ndarray:
    """Elementwise derivative of the tanh-form gelu."""
    a = np.asarray(m, dtype=np.float64)
    inner = _GELU_C * (a + _GELU_A * a**3)
    t = np.tanh(inner)
    return 0.5 * (1.0 + t) + 0.5 * a * (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_A * a * a)


def pool_group_sizes(rows: int, k: int) -> list[int]:
    """Sizes of k contiguous near-equal groups over `rows` items, larger first."""
    if not 1 <= k <= rows:
        raise ArgumentError(f"group count {k} must be in [1, {rows}]")
    base, extra = divmod(rows, k)
    return [base + 1] * extra + [base] * (k - extra)


def pool_matrix(rows: int, k: int) -> np.ndarray:
    """The (k x rows) averaging matrix P with mean_pool_groups(m, k) == P @ m."""
    sizes = pool_group_sizes(rows, k)
    p = np.zeros((k, rows))
    start = 0
    for g, size in enumerate(sizes):
        p[g, start : start + size] = 1.0 / size
        start += size
    return p


def mean_pool_groups(m, k: int) -> np.ndarray:
    """Average k contiguous near-equal row groups (larger groups first)."""
    a = as_matrix(m)
    sizes = pool_group_sizes(a.shape[0], k)
    starts = np.cumsum([0] + sizes[:-1])
    sums = np.add.reduceat(a, starts, axis=0)
    return sums / np.asarray(sizes, dtype=np.float64)[:, None]


def cosine_sim(u, v) -> float:
    """Cosine similarity of two nonzero vectors, clipped into [-1, 1]."""
    uu = np.asarray(u, dtype=np.float64).ravel()
    vv = np.asarray(v, dtype=np.float64).ravel()
    if uu.shape != vv.shape:
        raise ShapeError(f"vector lengths differ: {uu.shape[0]} vs {vv.shape[0]}")
    nu = np.linalg.norm(uu)
    nv = np.linalg.norm(vv)
    if not (nu > 0.0 and nv > 0.0):
        raise DegenerateInputError("cosine similarity of a zero-norm vector is undefined")
    return float(np.clip(uu @ vv / (nu * nv), -1.0, 1.0))
