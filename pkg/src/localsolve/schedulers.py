"""Policies choosing the next coordinate to update, and walk-coverage tracking.

All policies expose ``next_coordinate(r, t)`` where ``r`` is the current
residual and ``t`` the number of tasks performed so far. Random policies own
a ``numpy.random.Generator`` seeded at construction, so a policy replayed
against the same residual history yields the same sequence.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .solver import TICK
from .sparse_core import ResidualVector, SparseMatrix

KINDS = (
    "round_robin_neighborhood",
    "cyclic_nonzero",
    "uniform_censored",
    "padded_uniform",
    "proportional_abs",
    "proportional_square",
    "greedy_max",
)


class EmptyResidualError(RuntimeError):
    pass


def bfs_layers(G: SparseMatrix, i: int) -> list[np.ndarray]:
    """Exact-distance layers from ``i`` along out-edges of the matrix graph."""
    dist = np.full(G.n, -1, dtype=np.int64)
    dist[i] = 0
    queue = deque([i])
    while queue:
        u = queue.popleft()
        cols, _ = G.row(u)
        for v in cols.tolist():
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    depth = int(dist.max())
    return [np.flatnonzero(dist == k) for k in range(depth + 1)]


def neighborhood_sizes(G: SparseMatrix, i: int, upto: int) -> list[int]:
    """``|N_i(k)|`` for ``k = 0..upto`` (balls of radius k, saturating)."""
    sizes = np.cumsum([len(layer) for layer in bfs_layers(G, i)]).tolist()
    return [sizes[min(k, len(sizes) - 1)] for k in range(upto + 1)]


class Policy:
    kind: str = ""

    def next_coordinate(self, r: ResidualVector, t: int):
        raise NotImplementedError

    @staticmethod
    def _need_support(r: ResidualVector) -> None:
        if r.l0 == 0:
            raise EmptyResidualError("residual is empty; nothing to update")


class RoundRobinNeighborhood(Policy):
    """Expanding-ball schedule: N_i(0), N_i(1), N_i(2), ...

    Members of each ball are visited in (distance, index) order. Once the
    ball covers everything reachable, the full reachable set is swept
    repeatedly. Coordinates whose residual is zero when their turn comes are
    skipped, not issued as no-op tasks. Skipping does not change the state
    trajectory (such an update would be a no-op), so walk coverage is
    measured on the full visit log and converted to tasks issued; see
    :meth:`coverage`.
    """

    kind = "round_robin_neighborhood"

    def __init__(self, G: SparseMatrix, i: int, keep_log: bool = False):
        layers = bfs_layers(G, i)
        self.G, self.i = G, i
        self.order = np.concatenate(layers)
        self.ball_end = np.cumsum([len(layer) for layer in layers])
        self.level = 0
        self.pos = 0
        # (coordinate, issued) for every schedule position visited
        self.log: list[tuple[int, bool]] | None = [] if keep_log else None

    def _advance(self) -> int:
        u = int(self.order[self.pos])
        self.pos += 1
        if self.pos >= self.ball_end[min(self.level, len(self.ball_end) - 1)]:
            self.level += 1
            self.pos = 0
        return u

    def next_coordinate(self, r: ResidualVector, t: int):
        self._need_support(r)
        # support is inside the reachable set, so two full sweeps always find it
        for _ in range(2 * len(self.order) + 2 * len(self.ball_end)):
            u = self._advance()
            issued = r.get(u) != 0.0
            if self.log is not None:
                self.log.append((u, issued))
            if issued:
                return u
        raise EmptyResidualError("no nonzero residual reachable from the target")

    def coverage(self, max_level: int | None = None) -> "WalkCoverage":
        """Walk coverage of the visits so far, with ``S_l`` counted in issued tasks."""
        if self.log is None:
            raise RuntimeError("construct with keep_log=True to track coverage")
        cov = sl_tracker([u for u, _ in self.log], self.G, self.i, max_level)
        issued = np.concatenate([[0], np.cumsum([flag for _, flag in self.log])])
        cov.s_values = [s if s == math.inf else int(issued[int(s)]) for s in cov.s_values]
        return cov


class CyclicNonzero(Policy):
    """Sweep ``order`` (default 0..n-1) cyclically, skipping zero residuals."""

    kind = "cyclic_nonzero"

    def __init__(self, n: int, order: Sequence[int] | None = None):
        self.order = np.arange(n) if order is None else np.asarray(order, dtype=np.int64)
        self.pos = 0

    def next_coordinate(self, r: ResidualVector, t: int):
        self._need_support(r)
        m = len(self.order)
        for _ in range(m):
            u = int(self.order[self.pos])
            self.pos = (self.pos + 1) % m
            if r.get(u) != 0.0:
                return u
        raise EmptyResidualError("support lies outside the sweep order")


class UniformCensored(Policy):
    """Uniform over the coordinates with nonzero residual."""

    kind = "uniform_censored"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def next_coordinate(self, r: ResidualVector, t: int):
        self._need_support(r)
        supp = r.support
        return int(supp[self.rng.integers(supp.size)])


class PaddedUniform(Policy):
    """Uniform over a support padded to ``min(t*d, n)`` slots.

    Draws landing on a padding slot return :data:`TICK`, a no-op task. At
    ``t = 0`` the slot count is 1, so the target itself is updated first.
    """

    kind = "padded_uniform"

    def __init__(self, d: int, n: int, seed: int = 0):
        self.d, self.n = int(d), int(n)
        self.rng = np.random.default_rng(seed)

    def slots(self, t: int, l0: int) -> int:
        return max(min(t * self.d, self.n), l0)

    def next_coordinate(self, r: ResidualVector, t: int):
        self._need_support(r)
        supp = r.support
        j = self.rng.integers(self.slots(t, supp.size))
        return int(supp[j]) if j < supp.size else TICK


class Proportional(Policy):
    """Probability proportional to ``|r_u|`` (power=1) or ``r_u**2`` (power=2)."""

    def __init__(self, power: int, seed: int = 0):
        if power not in (1, 2):
            raise ValueError("power must be 1 or 2")
        self.power = power
        self.kind = "proportional_abs" if power == 1 else "proportional_square"
        self.rng = np.random.default_rng(seed)

    def next_coordinate(self, r: ResidualVector, t: int):
        self._need_support(r)
        supp = r.support
        vals = r.values
        w = np.abs(vals) if self.power == 1 else vals * vals
        cum = np.cumsum(w)
        x = self.rng.random() * cum[-1]
        j = min(int(np.searchsorted(cum, x, side="right")), supp.size - 1)
        return int(supp[j])


class GreedyMax(Policy):
    """``argmax |r_u|``, lowest index on ties."""

    kind = "greedy_max"

    def next_coordinate(self, r: ResidualVector, t: int):
        self._need_support(r)
        a = np.abs(r.values)
        return int(r.support[a == a.max()].min())


def make_policy(kind: str, G: SparseMatrix, i: int, seed: int = 0) -> Policy:
    if kind == "round_robin_neighborhood":
        return RoundRobinNeighborhood(G, i)
    if kind == "cyclic_nonzero":
        return CyclicNonzero(G.n)
    if kind == "uniform_censored":
        return UniformCensored(seed)
    if kind == "padded_uniform":
        return PaddedUniform(max(G.d, 1), G.n, seed)
    if kind == "proportional_abs":
        return Proportional(1, seed)
    if kind == "proportional_square":
        return Proportional(2, seed)
    if kind == "greedy_max":
        return GreedyMax()
    raise ValueError(f"unknown scheduler {kind!r}; choose from {', '.join(KINDS)}")


class Recorder(Policy):
    """Wraps a policy and remembers the coordinates it emitted (ticks excluded)."""

    def __init__(self, inner: Policy):
        self.inner = inner
        self.kind = inner.kind
        self.sequence: list[int] = []

    def next_coordinate(self, r, t):
        u = self.inner.next_coordinate(r, t)
        if u is not TICK:
            self.sequence.append(u)
        return u


# -- walk coverage -----------------------------------------------------------


@dataclass
class WalkCoverage:
    layers: list[np.ndarray]  # exact-distance layers
    ball_sizes: list[int]  # |N_i(l)| for each tracked l
    s_values: list[float]  # S_l as int, math.inf once coverage fails

    @property
    def covered(self) -> list[int]:
        return [int(s) for s in self.s_values if s != math.inf]

    @property
    def delay_bound(self) -> int:
        """Largest gap ``S_l - S_{l-1}`` among covered levels (with S_{-1} = 0)."""
        s = [0] + self.covered
        return max(b - a for a, b in zip(s, s[1:])) if len(s) > 1 else 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["l", "layer_size", "S_l"])
            for l, (size, s) in enumerate(zip(self.ball_sizes, self.s_values)):
                w.writerow([l, size, "inf" if s == math.inf else int(s)])


def sl_tracker(update_sequence: Iterable[int], G: SparseMatrix, i: int, max_level: int | None = None) -> WalkCoverage:
    """Walk-coverage times for a recorded update sequence.

    ``S_l`` is the smallest ``t >= S_{l-1}`` such that every node of the
    radius-``l`` ball ``N_i(l)`` occurs among ``u[S_{l-1}], ..., u[t-1]``;
    after ``S_l`` tasks every walk of length at most ``l`` from ``i`` has
    been counted in the estimate. Levels are computed until the sequence
    fails to cover one (recorded as ``math.inf``) or ``max_level`` is hit.
    """
    seq = list(update_sequence)
    layers = bfs_layers(G, i)
    balls = np.cumsum([len(layer) for layer in layers]).tolist()
    full = set(np.concatenate(layers).tolist())

    ball_sizes: list[int] = []
    s_values: list[float] = []
    start = 0
    level = 0
    while max_level is None or level <= max_level:
        need = set(np.concatenate(layers[: level + 1]).tolist()) if level < len(layers) else set(full)
        ball_sizes.append(balls[min(level, len(balls) - 1)])
        t = start
        while need and t < len(seq):
            need.discard(seq[t])
            t += 1
        if need:
            s_values.append(math.inf)
            break
        s_values.append(t)
        start = t
        level += 1
    return WalkCoverage(layers, ball_sizes, s_values)
