"""Geodesics in the transposition Cayley graph.

A path is stored as a start point, a target and the transpositions that are
right-multiplied in turn; vertex k is ``start * t_1 * ... * t_k``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .perm import CycleStructure, Permutation, Transposition, cycle_structure, identity, inverse
from .samplers import as_generator
from .walk import WalkTrace


class GeodesicError(AssertionError):
    """A constructed path failed geodesic validation."""


@dataclass(frozen=True)
class GeodesicPath:
    start: Permutation
    target: Permutation
    ti: np.ndarray  # 0-based, i < j
    tj: np.ndarray

    def __len__(self) -> int:
        return int(self.ti.size)

    @property
    def transpositions(self) -> tuple[Transposition, ...]:
        return tuple(Transposition(a + 1, b + 1) for a, b in zip(self.ti.tolist(), self.tj.tolist()))

    def distances_to_target(self) -> np.ndarray:
        """Distance to the target at vertices 0..len."""
        rel = inverse(self.target).array[self.start.array].copy()
        d0 = self.start.n - K.count_cycles(rel)
        out = np.empty(len(self) + 1, dtype=np.int64)
        out[0] = d0
        K.distance_after_steps(rel, self.ti, self.tj, out[1:])
        return out

    def validate(self) -> "GeodesicPath":
        d = self.distances_to_target()
        if d[-1] != 0:
            raise GeodesicError(f"path ends at distance {d[-1]} from its target")
        if np.any(np.diff(d) != -1):
            bad = int(np.nonzero(np.diff(d) != -1)[0][0])
            raise GeodesicError(f"distance to target does not drop at step {bad + 1}")
        return self

    def vertices(self):
        img = self.start.array.copy()
        yield Permutation._from_array(img.copy())
        for a, b in zip(self.ti.tolist(), self.tj.tolist()):
            img[a], img[b] = img[b], img[a]
            yield Permutation._from_array(img.copy())

    def to_csv(self, fh=None) -> str | None:
        """Columns step, i, j, distance_to_target; row 0 is the start point."""
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "i", "j", "distance_to_target"])
        d = self.distances_to_target().tolist()
        w.writerow([0, "", "", d[0]])
        for s, (a, b) in enumerate(zip(self.ti.tolist(), self.tj.tolist()), start=1):
            w.writerow([s, a + 1, b + 1, d[s]])
        return fh.getvalue() if own else None


def _path(start, target, ti, tj) -> GeodesicPath:
    ti = np.asarray(ti, dtype=np.int64)
    tj = np.asarray(tj, dtype=np.int64)
    ti.setflags(write=False)
    tj.setflags(write=False)
    return GeodesicPath(start, target, ti, tj)


def _greedy_arrays(img: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = img.shape[0]
    d = n - K.count_cycles(img)
    u1, u2 = rng.random(d), rng.random(d)
    oi = np.empty(d, dtype=np.int64)
    oj = np.empty(d, dtype=np.int64)
    steps = K.greedy_fragment(img.copy(), u1, u2, oi, oj)
    if steps != d:
        raise GeodesicError(f"greedy fragmentation took {steps} steps for distance {d}")
    return oi, oj


def greedy_geodesic(sigma: Permutation, rng) -> GeodesicPath:
    """Geodesic from sigma to the identity; every step splits a cycle, chosen
    uniformly among all splitting transpositions."""
    oi, oj = _greedy_arrays(sigma.array, as_generator(rng))
    return _path(sigma, identity(sigma.n), oi, oj).validate()


@dataclass(frozen=True)
class ShadowResult:
    path: GeodesicPath
    k_history: np.ndarray  # |K| after each examined walk increment
    gap_history: np.ndarray  # exact d(X, gamma) at the same stages
    residual_steps: int

    @property
    def max_walk_gap(self) -> int:
        """Largest certified bound |K| on the walk-to-path distance."""
        return int(self.k_history.max()) if self.k_history.size else 0

    @property
    def max_exact_gap(self) -> int:
        return int(self.gap_history.max()) if self.gap_history.size else 0

    @property
    def final_k(self) -> int:
        return int(self.k_history[-1]) if self.k_history.size else 0


def shadow_geodesic(trace: WalkTrace, rng=None) -> ShadowResult:
    """Follow the walk backwards from its endpoint, keeping only the
    increments that split a cycle, then finish greedily.

    The greedy tail uses ``rng`` (default: a fixed stream) for tie-breaking.
    """
    n = trace.n
    N = len(trace)
    g = trace.final.copy()
    applied = np.zeros(N, dtype=np.int64)
    k_hist = np.zeros(N, dtype=np.int64)
    gap_hist = np.zeros(N, dtype=np.int64)
    stuck = np.zeros(N, dtype=np.int64)
    K.shadow_kernel(g, trace.ti, trace.tj, applied, k_hist, gap_hist, stuck)
    if np.any(gap_hist > k_hist):
        s = int(np.nonzero(gap_hist > k_hist)[0][0])
        raise GeodesicError(f"walk-to-path gap {gap_hist[s]} exceeds |K| = {k_hist[s]} at stage {s}")
    rev = np.arange(N - 1, -1, -1)
    keep = rev[applied[rev] == 1]
    gen = as_generator(0 if rng is None else rng)
    ri, rj = _greedy_arrays(g, gen)
    ti = np.concatenate([trace.ti[keep], ri])
    tj = np.concatenate([trace.tj[keep], rj])
    path = _path(trace.endpoint, identity(n), ti, tj)
    expected = int(trace.distances[-1]) if N else 0
    if len(path) != expected:
        raise GeodesicError("shadow path length differs from the endpoint distance")
    path.validate()
    return ShadowResult(path, k_hist, gap_hist, int(ri.size))


@lru_cache(maxsize=None)
def _count_by_type(cs: CycleStructure) -> int:
    if cs.distance == 0:
        return 1
    rep = cs.representative()
    img = rep.array
    total = 0
    for cyc in rep.cycles(include_fixed=False):
        for a in range(len(cyc)):
            for b in range(a + 1, len(cyc)):
                i, j = cyc[a] - 1, cyc[b] - 1
                nxt = img.copy()
                nxt[i], nxt[j] = nxt[j], nxt[i]
                total += _count_by_type(cycle_structure(Permutation._from_array(nxt)))
    return total


ORACLE_MAX_N = 7


def count_geodesics_oracle(sigma: Permutation) -> int:
    """Count minimal factorisations by recursion over splitting transpositions."""
    if sigma.n > ORACLE_MAX_N:
        raise ValueError(f"oracle limited to n <= {ORACLE_MAX_N}")
    return _count_by_type(cycle_structure(sigma))


def point_to_path_distance(p: Permutation, path: GeodesicPath) -> int:
    """Smallest Cayley distance from p to a vertex of the path."""
    if p.n != path.start.n:
        raise ValueError("point and path live in different groups")
    rel = inverse(p).array[path.start.array].copy()
    d0 = p.n - K.count_cycles(rel)
    if len(path) == 0:
        return int(d0)
    dists = np.empty(len(path), dtype=np.int64)
    best = K.distance_after_steps(rel, path.ti, path.tj, dists)
    return int(min(d0, best))
