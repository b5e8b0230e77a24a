"""Random transposition walk coupled to a random graph.

Time is discrete: one uniformly chosen transposition per step, so ``t`` steps
stand in for continuous time ``t``. Each step also adds the edge {i, j} to a
union-find forest that keeps per-component vertex and edge counts.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _kernels as K
from .perm import COAGULATION, FRAGMENTATION, Permutation, Transposition

KIND_NAMES = (COAGULATION, FRAGMENTATION)


def draw_transpositions(n: int, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``count`` uniform transpositions as 0-based arrays with i < j."""
    if n < 2:
        raise ValueError("transpositions need n >= 2")
    a = rng.integers(0, n, size=count)
    b = rng.integers(0, n - 1, size=count)
    b += b >= a
    return np.minimum(a, b), np.maximum(a, b)


@dataclass(frozen=True)
class StepEvent:
    t: Transposition
    kind: str
    distance_after: int


class WalkState:
    """Mutable walk state; single owner."""

    def __init__(self, n: int, start: Permutation | None = None):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n
        self.img = np.arange(n, dtype=np.int64) if start is None else start.array.copy()
        self.lab = np.empty(n, dtype=np.int64)
        self.csize = np.empty(n, dtype=np.int64)
        self.free = np.empty(n, dtype=np.int64)
        self.meta = np.zeros(K.META_SIZE, dtype=np.int64)
        K.init_tracker(self.img, self.lab, self.csize, self.free, self.meta)
        self.parent = np.arange(n, dtype=np.int64)
        self.dsz = np.ones(n, dtype=np.int64)
        self.dedge = np.zeros(n, dtype=np.int64)
        self.meta[K.M_NCOMP] = n

    @property
    def perm(self) -> Permutation:
        return Permutation._from_array(self.img.copy())

    @property
    def steps(self) -> int:
        return int(self.meta[K.M_STEPS])

    @property
    def frag_total(self) -> int:
        return int(self.meta[K.M_FRAG])

    @property
    def cycle_count(self) -> int:
        return int(self.meta[K.M_NCYC])

    @property
    def component_count(self) -> int:
        return int(self.meta[K.M_NCOMP])

    @property
    def distance(self) -> int:
        return self.n - self.cycle_count

    @property
    def extra_frag_cycles(self) -> int:
        return self.cycle_count - self.component_count

    def apply(self, ti: np.ndarray, tj: np.ndarray, stop_dist: int = -1,
              abort_on_frag: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Apply a block of 0-based transpositions; returns (kinds, distances)
        for the steps actually taken."""
        ti = np.ascontiguousarray(ti, dtype=np.int64)
        tj = np.ascontiguousarray(tj, dtype=np.int64)
        if ti.size and (ti.min() < 0 or tj.max() >= self.n or np.any(ti >= tj)):
            raise ValueError("transpositions must satisfy 0 <= i < j < n")
        kinds = np.zeros(ti.size, dtype=np.int8)
        dists = np.zeros(ti.size, dtype=np.int64)
        used = K.walk_run(self.img, self.lab, self.csize, self.free, self.parent, self.dsz,
                          self.dedge, self.meta, ti, tj, kinds, dists, stop_dist, abort_on_frag)
        return kinds[:used], dists[:used]

    def apply_transposition(self, t: Transposition) -> StepEvent:
        kinds, dists = self.apply(np.array([t.i - 1]), np.array([t.j - 1]))
        return StepEvent(t, KIND_NAMES[kinds[0]], int(dists[0]))

    def step(self, rng: np.random.Generator) -> StepEvent:
        ti, tj = draw_transpositions(self.n, 1, rng)
        return self.apply_transposition(Transposition(int(ti[0]) + 1, int(tj[0]) + 1))

    def roots(self) -> np.ndarray:
        return np.array([K.dsu_find(self.parent, x) for x in range(self.n)], dtype=np.int64)


@dataclass(frozen=True)
class ComponentStats:
    count: int
    size_hist: dict[int, int]
    trees: int
    unicyclic: int
    unicyclic_weight: int
    complex_weight: int  # vertices in components with two or more surplus edges


def component_stats(state: WalkState) -> ComponentStats:
    roots = np.unique(state.roots())
    sizes = state.dsz[roots]
    edges = state.dedge[roots]
    surplus = edges - (sizes - 1)
    vals, cnt = np.unique(sizes, return_counts=True)
    return ComponentStats(
        count=int(roots.size),
        size_hist={int(v): int(c) for v, c in zip(vals, cnt)},
        trees=int(np.sum(surplus == 0)),
        unicyclic=int(np.sum(surplus == 1)),
        unicyclic_weight=int(np.sum(sizes[surplus == 1])),
        complex_weight=int(np.sum(sizes[surplus >= 2])),
    )


def extra_fragment_cycles(state: WalkState) -> int:
    """Cycles of the walk beyond the number of graph components."""
    return state.extra_frag_cycles


@dataclass
class WalkTrace:
    """Transposition sequence of a walk from the identity, 0-based arrays."""

    n: int
    ti: np.ndarray
    tj: np.ndarray
    kinds: np.ndarray
    distances: np.ndarray
    final: np.ndarray
    seed: int | None = None
    _events: list | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return int(self.ti.size)

    @property
    def endpoint(self) -> Permutation:
        return Permutation._from_array(self.final.copy())

    @property
    def distance_series(self) -> np.ndarray:
        """d(sigma_t) for t = 0..len."""
        return np.concatenate([[0], self.distances]).astype(np.int64)

    @property
    def fragmentations(self) -> int:
        return int(np.sum(self.kinds))

    @property
    def events(self) -> list[StepEvent]:
        if self._events is None:
            self._events = list(self.iter_events())
        return self._events

    def iter_events(self) -> Iterator[StepEvent]:
        for a, b, k, d in zip(self.ti.tolist(), self.tj.tolist(), self.kinds.tolist(), self.distances.tolist()):
            yield StepEvent(Transposition(a + 1, b + 1), KIND_NAMES[k], d)

    def transpositions(self) -> list[Transposition]:
        return [Transposition(a + 1, b + 1) for a, b in zip(self.ti.tolist(), self.tj.tolist())]

    def to_csv(self, fh=None) -> str | None:
        """Columns step, i, j, kind, distance (1-based step and labels)."""
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "i", "j", "kind", "distance"])
        for s, (a, b, k, d) in enumerate(zip(self.ti.tolist(), self.tj.tolist(), self.kinds.tolist(),
                                             self.distances.tolist()), start=1):
            w.writerow([s, a + 1, b + 1, KIND_NAMES[k], d])
        return fh.getvalue() if own else None


def trace_from_transpositions(n: int, ti, tj, seed: int | None = None) -> WalkTrace:
    state = WalkState(n)
    ti = np.ascontiguousarray(ti, dtype=np.int64)
    tj = np.ascontiguousarray(tj, dtype=np.int64)
    lo, hi = np.minimum(ti, tj), np.maximum(ti, tj)
    kinds, dists = state.apply(lo, hi)
    return WalkTrace(n, lo, hi, kinds, dists, state.img.copy(), seed)


def run(n: int, steps: int, rng: np.random.Generator, seed: int | None = None) -> WalkTrace:
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if n == 1:
        if steps:
            raise ValueError("no transpositions exist for n = 1")
        e = np.zeros(0, dtype=np.int64)
        return WalkTrace(1, e, e, e.astype(np.int8), e, np.zeros(1, dtype=np.int64), seed)
    ti, tj = draw_transpositions(n, steps, rng)
    return trace_from_transpositions(n, ti, tj, seed)


def run_state(n: int, steps: int, rng: np.random.Generator) -> tuple[WalkState, np.ndarray]:
    """Walk without keeping a trace; returns the state and the kinds array."""
    state = WalkState(n)
    ti, tj = draw_transpositions(n, steps, rng)
    kinds, _ = state.apply(ti, tj)
    return state, kinds


def endpoint_distance(n: int, steps: int, rng: np.random.Generator) -> tuple[int, int]:
    """(distance, fragmentations) after ``steps`` steps from the identity."""
    state, _ = run_state(n, steps, rng)
    return state.distance, state.frag_total


__all__ = [
    "draw_transpositions",
    "StepEvent",
    "WalkState",
    "WalkTrace",
    "ComponentStats",
    "component_stats",
    "extra_fragment_cycles",
    "trace_from_transpositions",
    "run",
    "run_state",
    "endpoint_distance",
]
