"""Similarity kernels and distance matrices over a feature matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.spatial.distance import pdist, squareform

from .errors import InvalidParam, ZeroVector

__all__ = [
    "Kernel",
    "DistanceMatrix",
    "compute_kernel",
    "sparsify_knn",
    "compute_distances",
]

_BLOCK = 512


def _as_array(features) -> np.ndarray:
    x = np.asarray(getattr(features, "values", features), dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidParam("features must be a non-empty 2-D array")
    return x


class Kernel:
    """Pairwise similarities ``s_ij`` in [0, 1], dense or sparse.

    Sparse kernels are stored as CSR; entries that are not stored are 0.
    Column access is the hot path for the kernel models, so a column-major
    copy is kept for non-symmetric dense kernels.
    """

    def __init__(self, values, symmetric: bool | None = None):
        if sparse.issparse(values):
            values = sparse.csr_array(values, dtype=float)
            values.sum_duplicates()
            data = values.data
            n, m = values.shape
        else:
            values = np.array(values, dtype=float)
            if values.ndim != 2:
                raise InvalidParam("kernel must be a square matrix")
            data = values
            n, m = values.shape
        if n != m or n == 0:
            raise InvalidParam("kernel must be a non-empty square matrix")
        if data.size and (not np.all(np.isfinite(data)) or data.min() < 0 or data.max() > 1):
            raise InvalidParam("kernel entries must lie in [0, 1]")
        self.values = values
        self.n = n
        if symmetric is None:
            if sparse.issparse(values):
                symmetric = abs(values - values.T).max() == 0 if values.nnz else True
            else:
                symmetric = bool(np.array_equal(values, values.T))
        self.symmetric = bool(symmetric)
        if sparse.issparse(values):
            self._csc = values.tocsc()
            self.row_sums = np.asarray(values.sum(axis=1)).ravel()
        else:
            values.setflags(write=False)
            self._cols = values if self.symmetric else np.ascontiguousarray(values.T)
            self.row_sums = values.sum(axis=1)
        self.row_sums.setflags(write=False)

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.values)

    def dense(self) -> np.ndarray:
        return self.values.toarray() if self.is_sparse else np.array(self.values)

    def column(self, j: int) -> np.ndarray:
        """``[s_ij for i in V]`` as a dense vector."""
        if self.is_sparse:
            return self._csc[:, [j]].toarray().ravel()
        return self._cols[j]

    def row(self, i: int) -> np.ndarray:
        """``[s_ij for j in V]`` as a dense vector."""
        if self.is_sparse:
            return self.values[[i], :].toarray().ravel()
        return self.values[i]

    def columns(self, idx: Sequence[int]) -> np.ndarray:
        """Dense ``n x len(idx)`` block of the selected columns."""
        idx = np.asarray(idx, dtype=np.intp)
        if self.is_sparse:
            return self._csc[:, idx].toarray()
        return self.values[:, idx]

    def columns_t(self, idx: Sequence[int]) -> np.ndarray:
        """``len(idx) x n`` block whose rows are the selected columns.

        A run of consecutive indices comes back as a view of the dense cache.
        """
        idx = np.asarray(idx, dtype=np.intp)
        if self.is_sparse:
            return self._csc[:, idx].T.toarray()
        if len(idx) and idx[-1] - idx[0] == len(idx) - 1 and np.all(np.diff(idx) == 1):
            return self._cols[idx[0] : idx[-1] + 1]
        return self._cols[idx]

    def column_sums(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.values.sum(axis=0)).ravel()
        return self.values.sum(axis=0)

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        if self.is_sparse:
            return self.values[rows][:, cols].toarray()
        return self.values[np.ix_(rows, cols)]

    def entry(self, i: int, j: int) -> float:
        if self.is_sparse:
            return float(self.values[i, j])
        return float(self.values[i, j])

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.values.diagonal(), dtype=float)

    def __repr__(self) -> str:
        kind = f"sparse nnz={self.values.nnz}" if self.is_sparse else "dense"
        return f"Kernel(n={self.n}, {kind}, symmetric={self.symmetric})"


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric non-negative distances with a zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        d = np.array(self.values, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise InvalidParam("distance matrix must be non-empty and square")
        if not np.all(np.isfinite(d)) or d.min() < 0:
            raise InvalidParam("distances must be finite and non-negative")
        if not np.array_equal(d, d.T):
            raise InvalidParam("distance matrix must be symmetric")
        if np.any(np.diagonal(d) != 0):
            raise InvalidParam("distance matrix needs a zero diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "values", d)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ZeroVector(f"feature row {int(zero[0])} is all zeros; cosine is undefined")
    return x / norms[:, None]


def _cosine(x: np.ndarray) -> np.ndarray:
    u = _unit_rows(x)
    n = u.shape[0]
    s = np.empty((n, n))
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        s[start:stop] = u[start:stop] @ u.T
    # mirror the upper triangle so symmetry is exact
    s = np.triu(s) + np.triu(s, 1).T
    np.clip(s, 0.0, 1.0, out=s)
    np.fill_diagonal(s, 1.0)
    return s


def compute_kernel(features, metric: str = "cosine", sigma: float | None = None) -> Kernel:
    """Dense symmetric similarity kernel.

    ``metric`` is ``"cosine"`` or ``"gaussian"``; the latter needs
    ``sigma > 0`` and gives ``exp(-|x_i - x_j|^2 / (2 sigma^2))``.
    Negative cosines (only possible with signed features) are clipped to 0.
    """
    x = _as_array(features)
    if metric == "cosine":
        return Kernel(_cosine(x), symmetric=True)
    if metric == "gaussian":
        if sigma is None or not sigma > 0:
            raise InvalidParam("gaussian kernel needs sigma > 0")
        sq = squareform(pdist(x, "sqeuclidean")) if x.shape[0] > 1 else np.zeros((1, 1))
        return Kernel(np.exp(-sq / (2.0 * sigma**2)), symmetric=True)
    raise InvalidParam(f"unknown similarity metric {metric!r}")


def sparsify_knn(kernel: Kernel, k: int) -> Kernel:
    """Keep the diagonal and the ``k`` largest off-diagonal entries per row.

    The result is symmetrized with ``max(s_ij, s_ji)``.  Ties go to the lower
    column index.
    """
    n = kernel.n
    if not 1 <= k < n:
        raise InvalidParam(f"k must satisfy 1 <= k < n={n}, got {k}")
    s = kernel.dense()
    off = s.copy()
    np.fill_diagonal(off, -np.inf)
    # stable sort on the negated values keeps the lowest index among ties
    keep = np.argsort(-off, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = keep.ravel()
    mask = np.zeros((n, n), dtype=bool)
    mask[rows, cols] = True
    np.fill_diagonal(mask, True)
    kept = np.where(mask, s, 0.0)
    kept = np.maximum(kept, kept.T)
    return Kernel(sparse.csr_array(kept), symmetric=True)


def compute_distances(features, metric: str = "euclidean") -> DistanceMatrix:
    """Pairwise distances: ``"euclidean"`` or ``"one_minus_cosine"``."""
    x = _as_array(features)
    if metric == "euclidean":
        d = squareform(pdist(x, "euclidean")) if x.shape[0] > 1 else np.zeros((1, 1))
        return DistanceMatrix(d)
    if metric == "one_minus_cosine":
        d = 1.0 - _cosine(x)
        np.fill_diagonal(d, 0.0)
        return DistanceMatrix(d)
    raise InvalidParam(f"unknown distance metric {metric!r}")
