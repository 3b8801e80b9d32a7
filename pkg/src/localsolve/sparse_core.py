"""Sparse storage and the few kernels the solver needs.

Two vector types live here. :class:`SparseVector` is an immutable value
(sorted indices, no stored zeros). :class:`ResidualVector` is the mutable
working store the update tasks write into; it keeps a dense buffer plus an
explicit support list so that point updates, support sampling and norms are
all cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np


class DimensionError(ValueError):
    pass


class Norms(NamedTuple):
    l0: int
    l1: float
    l2: float
    linf: float


class NormEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


class SparseVector:
    """Immutable sparse vector with strictly increasing indices."""

    __slots__ = ("dim", "indices", "values")

    def __init__(self, dim: int, indices=(), values=()):
        if dim < 1:
            raise DimensionError(f"dimension must be positive, got {dim}")
        idx = np.asarray(indices, dtype=np.int64).ravel()
        val = np.asarray(values, dtype=np.float64).ravel()
        if idx.shape != val.shape:
            raise DimensionError("indices and values differ in length")
        if idx.size:
            if idx.min() < 0 or idx.max() >= dim:
                raise DimensionError(f"index out of range for dimension {dim}")
            order = np.argsort(idx, kind="stable")
            idx, val = idx[order], val[order]
            if np.any(np.diff(idx) == 0):
                raise ValueError("duplicate indices")
            if not np.all(np.isfinite(val)):
                raise ValueError("non-finite value")
            keep = val != 0.0
            idx, val = idx[keep], val[keep]
        idx.setflags(write=False)
        val.setflags(write=False)
        self.dim = int(dim)
        self.indices = idx
        self.values = val

    @classmethod
    def from_dict(cls, dim: int, items: Mapping[int, float]) -> "SparseVector":
        keys = sorted(items)
        return cls(dim, keys, [items[k] for k in keys])

    @classmethod
    def from_dense(cls, x) -> "SparseVector":
        x = np.asarray(x, dtype=np.float64)
        nz = np.flatnonzero(x)
        return cls(x.size, nz, x[nz])

    @classmethod
    def basis(cls, dim: int, i: int) -> "SparseVector":
        return cls(dim, [i], [1.0])

    @property
    def l0(self) -> int:
        return int(self.indices.size)

    def get(self, i: int) -> float:
        j = np.searchsorted(self.indices, i)
        if j < self.indices.size and self.indices[j] == i:
            return float(self.values[j])
        return 0.0

    def items(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def dot(self, x) -> float:
        return float(np.dot(self.values, np.asarray(x, dtype=np.float64)[self.indices]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"SparseVector(dim={self.dim}, entries={self.items()})"


class ResidualVector:
    """Mutable sparse vector used as the working residual.

    The support is kept as an unordered index list with a position map, so
    inserting, removing and uniform sampling over the support are O(1).
    Exact zeros are pruned after every write.
    """

    def __init__(self, dim: int):
        self.dim = int(dim)
        self._buf = np.zeros(self.dim)
        self._supp = np.empty(self.dim, dtype=np.int64)
        self._pos = np.full(self.dim, -1, dtype=np.int64)
        self._k = 0

    @classmethod
    def from_sparse(cls, v: SparseVector) -> "ResidualVector":
        r = cls(v.dim)
        for i, x in zip(v.indices.tolist(), v.values.tolist()):
            r.set(i, x)
        return r

    def copy(self) -> "ResidualVector":
        r = ResidualVector.__new__(ResidualVector)
        r.dim = self.dim
        r._buf = self._buf.copy()
        r._supp = self._supp.copy()
        r._pos = self._pos.copy()
        r._k = self._k
        return r

    @property
    def l0(self) -> int:
        return self._k

    def get(self, i: int) -> float:
        return float(self._buf[i])

    @property
    def support(self) -> np.ndarray:
        """Support indices in internal (insertion-dependent) order. Read-only view."""
        view = self._supp[: self._k]
        view.flags.writeable = False
        return view

    @property
    def values(self) -> np.ndarray:
        return self._buf[self._supp[: self._k]]

    def _insert(self, i: int) -> None:
        self._pos[i] = self._k
        self._supp[self._k] = i
        self._k += 1

    def _remove(self, i: int) -> None:
        p = self._pos[i]
        last = self._supp[self._k - 1]
        self._supp[p] = last
        self._pos[last] = p
        self._pos[i] = -1
        self._k -= 1

    def set(self, i: int, value: float) -> None:
        was = self._buf[i] != 0.0
        self._buf[i] = value
        if value != 0.0:
            if not was:
                self._insert(i)
        elif was:
            self._remove(i)

    def add(self, i: int, value: float) -> None:
        self.set(i, self._buf[i] + value)

    def add_many(self, cols: np.ndarray, increments: np.ndarray) -> None:
        """``r[cols] += increments`` for distinct ``cols``."""
        if cols.size == 0:
            return
        old = self._buf[cols]
        new = old + increments
        self._buf[cols] = new
        was = old != 0.0
        now = new != 0.0
        changed = was != now
        if changed.any():
            for c, became in zip(cols[changed].tolist(), now[changed].tolist()):
                if became:
                    self._insert(c)
                else:
                    self._remove(c)

    def to_sparse(self) -> SparseVector:
        idx = np.sort(self._supp[: self._k])
        return SparseVector(self.dim, idx, self._buf[idx])

    def to_dense(self) -> np.ndarray:
        return self._buf.copy()

    def dot(self, x) -> float:
        idx = np.sort(self._supp[: self._k])
        return float(np.dot(self._buf[idx], np.asarray(x, dtype=np.float64)[idx]))

    def __repr__(self) -> str:
        return f"ResidualVector(dim={self.dim}, l0={self._k})"


def norms(v: SparseVector | ResidualVector) -> Norms:
    vals = v.values
    if vals.size == 0:
        return Norms(0, 0.0, 0.0, 0.0)
    a = np.abs(vals)
    return Norms(int(vals.size), float(a.sum()), float(np.sqrt(np.dot(vals, vals))), float(a.max()))


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square CSR matrix with sorted rows and no stored zeros.

    Row ``u`` lists the out-neighbours ``N_u`` of ``u`` in the matrix graph.
    Instances are immutable; ``d`` (max row nnz) is fixed at construction.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        for a in (self.indptr, self.indices, self.data):
            a.setflags(write=False)
        diag = np.zeros(self.n)
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        on_diag = rows == self.indices
        diag[rows[on_diag]] = self.data[on_diag]
        diag.setflags(write=False)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_diag", diag)
        object.__setattr__(self, "_off", on_diag)
        object.__setattr__(self, "_row_cache", {})

    @classmethod
    def from_triplets(cls, n: int, rows, cols, vals) -> "SparseMatrix":
        """Build from coordinate triplets; duplicate positions are summed."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (rows.size == cols.size == vals.size):
            raise DimensionError("triplet arrays differ in length")
        if n < 1:
            raise DimensionError(f"dimension must be positive, got {n}")
        if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
            raise DimensionError(f"entry index out of range for n={n}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite matrix entry")
        key = rows * n + cols
        order = np.argsort(key, kind="stable")
        key, vals = key[order], vals[order]
        uniq, start = np.unique(key, return_index=True)
        summed = np.add.reduceat(vals, start) if vals.size else vals
        keep = summed != 0.0
        uniq, summed = uniq[keep], summed[keep]
        r, c = np.divmod(uniq, n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
        return cls(int(n), indptr, c.astype(np.int64), summed.astype(np.float64))

    @classmethod
    def from_dense(cls, M) -> "SparseMatrix":
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {M.shape}")
        r, c = np.nonzero(M)
        return cls.from_triplets(M.shape[0], r, c, M[r, c])

    @classmethod
    def zeros(cls, n: int) -> "SparseMatrix":
        return cls.from_triplets(n, [], [], [])

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    @property
    def d(self) -> int:
        return int(np.diff(self.indptr).max()) if self.n else 0

    def row_nnz(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def diagonal(self, u: int) -> float:
        return float(self._diag[u])

    def offdiag_row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Columns and values of row ``u`` excluding the diagonal (cached)."""
        hit = self._row_cache.get(u)
        if hit is None:
            lo, hi = self.indptr[u], self.indptr[u + 1]
            keep = ~self._off[lo:hi]
            hit = (self.indices[lo:hi][keep], self.data[lo:hi][keep])
            self._row_cache[u] = hit
        return hit

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._rows.copy(), self.indices.copy(), self.data.copy()

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self._rows, self.indices] = self.data
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_triplets(self.n, self.indices, self._rows, self.data)

    def scaled(self, c: float) -> "SparseMatrix":
        return SparseMatrix.from_triplets(self.n, self._rows, self.indices, self.data * c)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.bincount(self._rows, weights=self.data * x[self.indices], minlength=self.n)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return np.bincount(self.indices, weights=self.data * y[self._rows], minlength=self.n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"SparseMatrix(n={self.n}, nnz={self.nnz}, d={self.d})"


def transpose_apply(M: SparseMatrix, v: SparseVector, ledger=None) -> SparseVector:
    """Return ``M.T @ v`` by scattering ``v_u * row_u(M)`` for each stored ``u``.

    If ``ledger`` is given, its ``multiplications`` counter is increased by
    the number of products formed, ``sum(|N_u| for u in support(v))``.
    """
    if v.dim != M.n:
        raise DimensionError(f"vector has dimension {v.dim}, matrix has n={M.n}")
    if v.l0 == 0:
        return SparseVector(M.n)
    lo = M.indptr[v.indices]
    hi = M.indptr[v.indices + 1]
    counts = hi - lo
    total = int(counts.sum())
    if ledger is not None:
        ledger.multiplications += total
    if total == 0:
        return SparseVector(M.n)
    pos = np.concatenate([np.arange(a, b) for a, b in zip(lo.tolist(), hi.tolist())])
    weights = np.repeat(v.values, counts) * M.data[pos]
    cols = M.indices[pos]
    acc = np.bincount(cols, weights=weights, minlength=M.n)
    touched = np.unique(cols)
    vals = acc[touched]
    keep = vals != 0.0
    return SparseVector(M.n, touched[keep], vals[keep])


def entrywise_abs(M: SparseMatrix) -> SparseMatrix:
    return SparseMatrix(M.n, M.indptr.copy(), M.indices.copy(), np.abs(M.data))


def operator_norm_estimate(M: SparseMatrix, iters: int = 10_000, tol: float = 1e-10) -> NormEstimate:
    """Power iteration on ``M.T M`` for the largest singular value.

    The returned value is ``||M v||`` for a unit vector ``v``, so it never
    exceeds the true norm. ``converged`` is False if the relative change did
    not drop below ``tol`` within ``iters`` steps.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if M.nnz == 0:
        return NormEstimate(0.0, True, 0)
    v = np.random.default_rng(0x5EED).standard_normal(M.n)
    v /= np.linalg.norm(v)
    prev, prev_step = 0.0, math.inf
    for k in range(1, iters + 1):
        mv = M.matvec(v)
        sigma = float(np.linalg.norm(mv))
        if sigma == 0.0:
            # start vector in the null space; restart from ones
            v = np.ones(M.n) / np.sqrt(M.n)
            continue
        w = M.rmatvec(mv)
        v = w / np.linalg.norm(w)
        step = abs(sigma - prev)
        # the increments shrink geometrically; bound the remaining tail by
        # step * q / (1 - q) with q the observed contraction
        q = step / prev_step if 0 < prev_step < math.inf else 1.0
        tail = step * q / (1.0 - q) if q < 1.0 else math.inf
        if step == 0.0 or tail <= tol * sigma:
            return NormEstimate(float(np.linalg.norm(M.matvec(v))), True, k)
        prev, prev_step = sigma, step
    return NormEstimate(float(np.linalg.norm(M.matvec(v))), False, iters)
