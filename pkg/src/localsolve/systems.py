"""Construction of fixed-point systems ``x = Gx + z``.

Covers the Jacobi and Richardson splittings of ``Ax = b``, PageRank and
Bonacich centrality systems, the two random graph families used in the
experiments, and Matrix Market / dense-vector file I/O.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .sparse_core import DimensionError, SparseMatrix, entrywise_abs, operator_norm_estimate

log = logging.getLogger(__name__)

MM_HEADER = "%%MatrixMarket matrix coordinate real general"


class InvalidSystemError(ValueError):
    """Invalid input to a system constructor."""


class MatrixMarketError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LinearSystem:
    A: SparseMatrix
    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64).ravel()
        if b.size != self.A.n:
            raise DimensionError(f"b has length {b.size}, A is {self.A.n}x{self.A.n}")
        if not np.all(np.isfinite(b)):
            raise ValueError("b contains non-finite values")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.A.n


@dataclass(frozen=True)
class FixedPointSystem:
    G: SparseMatrix
    z: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        z = np.array(self.z, dtype=np.float64).ravel()
        if z.size != self.G.n:
            raise DimensionError(f"z has length {z.size}, G is {self.G.n}x{self.G.n}")
        if not np.all(np.isfinite(z)):
            raise ValueError("z contains non-finite values")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.G.n

    @property
    def d(self) -> int:
        return self.G.d


@dataclass(frozen=True)
class GraphSpec:
    kind: str  # "erdos_renyi" | "power_law_config" | "explicit"
    n: int
    p: float | None = None
    exponent: float | None = None
    seed: int = 0
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "erdos_renyi":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError("erdos_renyi needs p in [0, 1]")
        elif self.kind == "power_law_config":
            if self.exponent is None or self.exponent <= 1.0:
                raise ValueError("power_law_config needs exponent > 1")
        elif self.kind != "explicit":
            raise ValueError(f"unknown graph kind {self.kind!r}")

    def with_seed(self, seed: int) -> "GraphSpec":
        return GraphSpec(self.kind, self.n, self.p, self.exponent, seed, self.edges)


# -- splittings of Ax = b ---------------------------------------------------


def jacobi_transform(sys: LinearSystem) -> FixedPointSystem:
    A = sys.A
    diag = np.array([A.diagonal(u) for u in range(A.n)])
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise InvalidSystemError(f"zero diagonal entry in row {int(zero[0])}")
    rows, cols, vals = A.triplets()
    off = rows != cols
    G = SparseMatrix.from_triplets(A.n, rows[off], cols[off], -vals[off] / diag[rows[off]])
    return FixedPointSystem(G, sys.b / diag, {"transform": "jacobi"})


def richardson_transform(sys: LinearSystem, gamma: float) -> FixedPointSystem:
    if not gamma > 0:
        raise InvalidSystemError(f"gamma must be positive, got {gamma}")
    n = sys.n
    rows, cols, vals = sys.A.triplets()
    eye = np.arange(n)
    G = SparseMatrix.from_triplets(
        n,
        np.concatenate([eye, rows]),
        np.concatenate([eye, cols]),
        np.concatenate([np.ones(n), -gamma * vals]),
    )
    return FixedPointSystem(G, gamma * sys.b, {"transform": "richardson", "gamma": float(gamma)})


def richardson_optimal_gamma(A: SparseMatrix, sym_tol: float = 1e-12) -> float:
    """Step size ``2 / (lambda_min + lambda_max)`` for symmetric positive definite ``A``."""
    dense = A.to_dense()
    if np.max(np.abs(dense - dense.T), initial=0.0) > sym_tol:
        raise InvalidSystemError("matrix is not symmetric")
    lam = np.linalg.eigvalsh(dense)
    if lam[0] <= 0.0:
        raise InvalidSystemError(f"matrix is not positive definite (lambda_min = {lam[0]:.3g})")
    return float(2.0 / (lam[0] + lam[-1]))


# -- centralities ------------------------------------------------------------


def row_normalize(adj: SparseMatrix) -> SparseMatrix:
    """Row-stochastic transition matrix from a nonnegative adjacency matrix."""
    rows, cols, vals = adj.triplets()
    if np.any(vals < 0):
        raise InvalidSystemError("adjacency has negative entries")
    sums = np.bincount(rows, weights=vals, minlength=adj.n)
    dangling = np.flatnonzero(sums == 0)
    if dangling.size:
        raise InvalidSystemError(f"node {int(dangling[0])} has no outgoing edges")
    return SparseMatrix.from_triplets(adj.n, rows, cols, vals / sums[rows])


def pagerank_system(P: SparseMatrix, alpha: float, stoch_tol: float = 1e-12) -> FixedPointSystem:
    if not 0.0 < alpha <= 1.0:
        raise InvalidSystemError(f"alpha must lie in (0, 1], got {alpha}")
    rows, cols, vals = P.triplets()
    if np.any(vals < 0):
        raise InvalidSystemError("P has negative entries")
    sums = np.bincount(rows, weights=vals, minlength=P.n)
    bad = np.flatnonzero(np.abs(sums - 1.0) > stoch_tol)
    if bad.size:
        raise InvalidSystemError(f"row {int(bad[0])} of P sums to {sums[bad[0]]!r}, not 1")
    G = SparseMatrix.from_triplets(P.n, cols, rows, (1.0 - alpha) * vals)
    return FixedPointSystem(G, np.full(P.n, alpha / P.n), {"centrality": "pagerank", "alpha": float(alpha)})


def default_bonacich_alpha(adj: SparseMatrix) -> float:
    """``0.9 / ||adj||_2`` so the scaled adjacency has norm about 0.9."""
    est = operator_norm_estimate(adj)
    if est.value == 0.0:
        return 0.9
    return 0.9 / est.value


def bonacich_system(adj: SparseMatrix, alpha: float | None = None) -> FixedPointSystem:
    """``x = alpha * adj x + 1``. Warns when the scaled matrix may not be contractive."""
    meta: dict[str, Any] = {"centrality": "bonacich"}
    if alpha is None:
        alpha = default_bonacich_alpha(adj)
        meta["alpha_rule"] = "0.9/||adj||_2"
    if not alpha > 0:
        raise InvalidSystemError(f"alpha must be positive, got {alpha}")
    meta["alpha"] = float(alpha)
    G = adj.scaled(alpha)
    est = operator_norm_estimate(entrywise_abs(G))
    meta["abs_norm_estimate"] = est.value
    if est.value >= 1.0:
        warnings.warn(
            f"||alpha*|adj|||_2 ~ {est.value:.4g} >= 1; convergence is not guaranteed",
            ConvergenceWarning,
            stacklevel=2,
        )
    return FixedPointSystem(G, np.ones(adj.n), meta)


# -- random graphs -----------------------------------------------------------


def _undirected(n: int, u: np.ndarray, v: np.ndarray) -> SparseMatrix:
    keep = u != v
    u, v = u[keep], v[keep]
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    pairs = np.unique(lo * n + hi)
    a, b = np.divmod(pairs, n)
    ones = np.ones(2 * a.size)
    return SparseMatrix.from_triplets(n, np.concatenate([a, b]), np.concatenate([b, a]), ones)


def power_law_degrees(n: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    support = np.arange(1, max(n - 1, 1) + 1)
    w = support.astype(float) ** (-exponent)
    w /= w.sum()
    deg = rng.choice(support, size=n, p=w)
    while deg.sum() % 2:
        deg[rng.integers(n)] = rng.choice(support, p=w)
    return deg


def generate_graph(spec: GraphSpec) -> SparseMatrix:
    """0/1 symmetric adjacency matrix for ``spec``; deterministic in ``spec.seed``."""
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "erdos_renyi":
        iu, ju = np.triu_indices(n, k=1)
        hit = rng.random(iu.size) < spec.p
        return _undirected(n, iu[hit], ju[hit])
    if spec.kind == "power_law_config":
        if n == 1:
            return SparseMatrix.zeros(1)
        deg = power_law_degrees(n, spec.exponent, rng)
        stubs = rng.permutation(np.repeat(np.arange(n), deg)).reshape(-1, 2)
        return _undirected(n, stubs[:, 0], stubs[:, 1])
    e = np.asarray(spec.edges, dtype=np.int64).reshape(-1, 2)
    return _undirected(n, e[:, 0], e[:, 1])


def degree_summary(adj: SparseMatrix) -> dict[str, float]:
    deg = np.diff(adj.indptr)
    return {
        "n": adj.n,
        "edges": int(adj.nnz // 2),
        "max_degree": int(deg.max()) if adj.n else 0,
        "avg_degree": float(deg.mean()) if adj.n else 0.0,
    }


def parse_graph_spec(text: str) -> GraphSpec:
    """Parse ``er:n=1000,p=0.0276,seed=7`` or ``powerlaw:n=500,exponent=1.5,seed=3``."""
    kind, _, rest = text.partition(":")
    kinds = {"er": "erdos_renyi", "erdos_renyi": "erdos_renyi",
             "powerlaw": "power_law_config", "power_law_config": "power_law_config"}
    if kind not in kinds:
        raise ValueError(f"unknown graph kind {kind!r} in {text!r}")
    kw: dict[str, Any] = {}
    for part in filter(None, rest.split(",")):
        key, eq, val = part.partition("=")
        if not eq:
            raise ValueError(f"malformed graph parameter {part!r}")
        key = key.strip()
        if key in ("n", "seed"):
            kw[key] = int(val)
        elif key in ("p", "exponent"):
            kw[key] = float(val)
        else:
            raise ValueError(f"unknown graph parameter {key!r}")
    if "n" not in kw:
        raise ValueError("graph spec needs n=")
    return GraphSpec(kinds[kind], **kw)


# -- file formats ------------------------------------------------------------


def save_matrix_market(M: SparseMatrix, path) -> None:
    rows, cols, vals = M.triplets()
    lines = [MM_HEADER, f"{M.n} {M.n} {M.nnz}"]
    lines += [f"{r + 1} {c + 1} {v!r}" for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix_market(path) -> SparseMatrix:
    """Read a square coordinate-format file (general or symmetric; real, integer or pattern)."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise MatrixMarketError("empty file", 1)
    head = text[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket header", 1)
    obj, fmt, field_, sym = (h.lower() for h in head[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {obj} {fmt}", 1)
    if field_ not in ("real", "integer", "pattern"):
        raise MatrixMarketError(f"unsupported field {field_}", 1)
    if sym not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {sym}", 1)

    size = None
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for lineno, line in enumerate(text[1:], start=2):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if size is None:
            try:
                nr, nc, nnz = (int(p) for p in parts)
            except ValueError:
                raise MatrixMarketError(f"bad size line {s!r}", lineno) from None
            if nr != nc:
                raise MatrixMarketError(f"matrix is {nr}x{nc}, expected square", lineno)
            size = (nr, nnz)
            continue
        want = 2 if field_ == "pattern" else 3
        if len(parts) != want:
            raise MatrixMarketError(f"expected {want} fields, got {len(parts)}", lineno)
        try:
            r, c = int(parts[0]), int(parts[1])
            v = 1.0 if field_ == "pattern" else float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry {s!r}", lineno) from None
        if not (1 <= r <= size[0] and 1 <= c <= size[0]):
            raise MatrixMarketError(f"index ({r}, {c}) out of range for {size[0]}x{size[0]}", lineno)
        rows.append(r - 1)
        cols.append(c - 1)
        vals.append(v)
        if sym == "symmetric" and r != c:
            rows.append(c - 1)
            cols.append(r - 1)
            vals.append(v)
    if size is None:
        raise MatrixMarketError("missing size line", len(text))
    declared = size[1]
    stored = len(rows) if sym == "general" else sum(1 for r, c in zip(rows, cols) if r >= c)
    if stored != declared:
        raise MatrixMarketError(f"header declares {declared} entries, found {stored}", len(text))
    return SparseMatrix.from_triplets(size[0], rows, cols, vals)


def save_vector(x: Sequence[float], path) -> None:
    x = np.asarray(x, dtype=np.float64).ravel()
    Path(path).write_text("\n".join([str(x.size)] + [repr(v) for v in x.tolist()]) + "\n")


def load_vector(path) -> np.ndarray:
    lines = [s.strip() for s in Path(path).read_text().splitlines()]
    lines = [s for s in lines if s and not s.startswith("%")]
    if not lines:
        raise ValueError(f"{path}: empty vector file")
    n = int(lines[0])
    if len(lines) - 1 != n:
        raise ValueError(f"{path}: header says {n} values, found {len(lines) - 1}")
    return np.array([float(s) for s in lines[1:]])
