"""Galton-Watson processes and the cycle graph of a pair of permutations.

Offspring conventions:
    G            geometric on {1, 2, ...}: P(G = j) = (1-p)^(j-1) p
    X = G - 1    geometric on {0, 1, ...}: P(X = j) = (1-p)^j p
    lifetimes    geometric on {0, 1, ...} with parameter p', so P(T = 0) = p'
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels as K
from .perm import Permutation, canonical_decomposition
from .samplers import as_generator

DEFAULT_CAP = 10**6
EXCEEDED = -1  # total recorded for runs that outgrew the cap


# ---------------------------------------------------------------- Gamma graph


@dataclass(frozen=True)
class GammaGraph:
    """Vertices are the cycles of sigma (weight = cycle length); one edge per
    transposition of pi's canonical decomposition."""

    n: int
    vertex_of: np.ndarray  # element (0-based) -> vertex index
    weights: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def vertex_count(self) -> int:
        return len(self.weights)

    def components(self) -> np.ndarray:
        """Component root of each vertex."""
        parent = np.arange(self.vertex_count, dtype=np.int64)
        size = np.ones(self.vertex_count, dtype=np.int64)
        for u, v in self.edges:
            K._union_sized(parent, size, u, v)
        return np.array([K.dsu_find(parent, x) for x in range(self.vertex_count)], dtype=np.int64)


def gamma_graph(sigma: Permutation, pi: Permutation) -> GammaGraph:
    if sigma.n != pi.n:
        raise ValueError("sigma and pi act on different sets")
    vertex_of = np.empty(sigma.n, dtype=np.int64)
    weights = []
    for v, cyc in enumerate(sigma.cycles()):
        for x in cyc:
            vertex_of[x - 1] = v
        weights.append(len(cyc))
    dec = canonical_decomposition(pi)
    edges = tuple((int(vertex_of[t.i - 1]), int(vertex_of[t.j - 1])) for t in dec.transpositions)
    vertex_of.setflags(write=False)
    return GammaGraph(sigma.n, vertex_of, tuple(weights), edges)


def weighted_component(g: GammaGraph, element: int) -> int:
    """Total weight of the component holding the sigma-cycle of ``element``."""
    if not 1 <= element <= g.n:
        raise ValueError(f"element {element} outside 1..{g.n}")
    roots = g.components()
    target = roots[g.vertex_of[element - 1]]
    w = np.asarray(g.weights)
    return int(w[roots == target].sum())


def join_weights(sigma_img: np.ndarray, pi_img: np.ndarray) -> np.ndarray:
    """Component weight for every element at once (0-based image arrays).

    A pi-cycle's decomposition chains its elements together, so the
    components of the graph are the blocks of the join of the two cycle
    partitions.
    """
    parent = np.empty(sigma_img.shape[0], dtype=np.int64)
    return K.join_components(np.ascontiguousarray(sigma_img), np.ascontiguousarray(pi_img), parent)


# ---------------------------------------------------------------- processes


@dataclass(frozen=True)
class ProgenySample:
    total: int  # EXCEEDED when the population passed the cap
    generations: tuple[int, ...]

    @property
    def exceeded(self) -> bool:
        return self.total == EXCEEDED


@dataclass(frozen=True)
class ModifiedBPConfig:
    offspring_p: float
    lifetime_p: float

    def __post_init__(self):
        for v in (self.offspring_p, self.lifetime_p):
            if not 0 < v < 1:
                raise ValueError("parameters must lie in (0, 1)")


def _check_p(p: float) -> None:
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")


def _first_generation(kind: str, p: float, rng, size=None):
    if kind == "one":
        return 1 if size is None else np.ones(size, dtype=np.int64)
    if kind == "geometric":
        return rng.geometric(p, size=size)
    raise ValueError(f"first_generation must be 'one' or 'geometric', not {kind!r}")


def _grow(z0: int, offspring, cap: int) -> ProgenySample:
    gens = [int(z0)]
    total = int(z0)
    z = int(z0)
    while z > 0:
        if total > cap:
            return ProgenySample(EXCEEDED, tuple(gens))
        z = int(offspring(z))
        gens.append(z)
        total += z
    return ProgenySample(total, tuple(gens[:-1]))


def shifted_geometric_bp(p: float, rng, cap: int = DEFAULT_CAP, first_generation: str = "one") -> ProgenySample:
    """Total progeny with offspring X = G - 1 (subcritical iff p > 1/2)."""
    _check_p(p)
    rng = as_generator(rng)
    z0 = _first_generation(first_generation, p, rng)
    return _grow(z0, lambda z: rng.negative_binomial(z, p), cap)


def pgw_total_progeny(c: float, rng, cap: int = DEFAULT_CAP) -> ProgenySample:
    if c <= 0:
        raise ValueError("c must be positive")
    rng = as_generator(rng)
    return _grow(1, lambda z: rng.poisson(c * z), cap)


HEIRS = ("first", "last", "random")


def _heir_index(counts: np.ndarray, heir: str, rng) -> np.ndarray:
    starts = np.cumsum(counts) - counts
    if heir == "first":
        return starts
    if heir == "last":
        return starts + counts - 1
    if heir == "random":
        return starts + (rng.random(counts.size) * counts).astype(np.int64)
    raise ValueError(f"heir must be one of {HEIRS}")


def _modified_step(lifetimes, owner, cfg, heir, rng):
    alive = lifetimes > 0
    parents_t = lifetimes[alive]
    counts = rng.geometric(cfg.offspring_p, size=parents_t.size)
    kids_owner = np.repeat(owner[alive], counts)
    kids_t = rng.geometric(cfg.lifetime_p, size=kids_owner.size) - 1
    if counts.size:
        kids_t[_heir_index(counts, heir, rng)] = parents_t - 1
    return kids_t, kids_owner


def modified_bp(cfg: ModifiedBPConfig, rng, cap: int = DEFAULT_CAP, root_cycle: bool = False,
                heir: str = "first") -> ProgenySample:
    """Ageing branching process.

    Non-terminal individuals (lifetime > 0) have G(offspring_p) children; one
    child, the heir, inherits the parent's lifetime minus one and the others
    draw fresh lifetimes. With ``root_cycle`` generation 0 is itself a
    G(offspring_p) block of individuals with fresh lifetimes (exploring from
    a whole cycle instead of a single point).
    """
    rng = as_generator(rng)
    z0 = rng.geometric(cfg.offspring_p) if root_cycle else 1
    lifetimes = rng.geometric(cfg.lifetime_p, size=z0) - 1
    owner = np.zeros(z0, dtype=np.int64)
    gens = [int(z0)]
    total = int(z0)
    while True:
        if total > cap:
            return ProgenySample(EXCEEDED, tuple(gens))
        lifetimes, owner = _modified_step(lifetimes, owner, cfg, heir, rng)
        if lifetimes.size == 0:
            return ProgenySample(total, tuple(gens))
        gens.append(int(lifetimes.size))
        total += int(lifetimes.size)


# ---------------------------------------------------------------- batched totals


def _batched(z: np.ndarray, offspring, cap: int) -> np.ndarray:
    total = z.astype(np.int64).copy()
    z = z.astype(np.int64).copy()
    live = np.nonzero(z > 0)[0]
    while live.size:
        kids = offspring(z[live])
        z[live] = kids
        total[live] += kids
        over = live[total[live] > cap]
        total[over] = EXCEEDED
        z[over] = 0
        live = live[z[live] > 0]
    return total


def shifted_geometric_totals(p: float, count: int, rng, cap: int = DEFAULT_CAP,
                             first_generation: str = "one") -> np.ndarray:
    _check_p(p)
    rng = as_generator(rng)
    z0 = _first_generation(first_generation, p, rng, size=count)
    return _batched(z0, lambda z: rng.negative_binomial(z, p), cap)


def pgw_totals(c: float, count: int, rng, cap: int = DEFAULT_CAP) -> np.ndarray:
    if c <= 0:
        raise ValueError("c must be positive")
    rng = as_generator(rng)
    return _batched(np.ones(count, dtype=np.int64), lambda z: rng.poisson(c * z), cap)


def modified_totals(cfg: ModifiedBPConfig, count: int, rng, cap: int = DEFAULT_CAP,
                    root_cycle: bool = False, heir: str = "first") -> np.ndarray:
    """Same law as repeated :func:`modified_bp`, simulated as flat arrays of
    individuals tagged with their run index."""
    rng = as_generator(rng)
    z0 = rng.geometric(cfg.offspring_p, size=count) if root_cycle else np.ones(count, dtype=np.int64)
    owner = np.repeat(np.arange(count, dtype=np.int64), z0)
    lifetimes = rng.geometric(cfg.lifetime_p, size=owner.size) - 1
    total = z0.astype(np.int64)
    dead = np.zeros(count, dtype=bool)
    while lifetimes.size:
        lifetimes, owner = _modified_step(lifetimes, owner, cfg, heir, rng)
        total += np.bincount(owner, minlength=count)
        over = (total > cap) & ~dead
        if over.any():
            dead |= over
            keep = ~dead[owner]
            lifetimes, owner = lifetimes[keep], owner[keep]
    total[dead] = EXCEEDED
    return total


# ---------------------------------------------------------------- exact laws


def shifted_geometric_progeny_law(p: float, kmax: int, first_generation: str = "one") -> np.ndarray:
    """P(total = t) for t = 0..kmax, by the hitting-time theorem:
    P(T = t | Z_0 = k) = (k/t) P(X_1 + ... + X_t = t - k)."""
    _check_p(p)
    t = np.arange(1, kmax + 1, dtype=np.float64)
    out = np.zeros(kmax + 1)

    def from_k(k):
        s = t - k  # number of offspring needed in total
        ok = s >= 0
        tt, ss = t[ok], s[ok]
        # negative binomial: C(t + s - 1, s) p^t (1-p)^s
        lognb = gammaln(tt + ss) - gammaln(ss + 1) - gammaln(tt) + tt * math.log(p) + ss * math.log1p(-p)
        res = np.zeros_like(t)
        res[ok] = (k / tt) * np.exp(lognb)
        return res

    if first_generation == "one":
        out[1:] = from_k(1)
    elif first_generation == "geometric":
        for k in range(1, kmax + 1):
            out[1:] += (1 - p) ** (k - 1) * p * from_k(k)
    else:
        raise ValueError(f"first_generation must be 'one' or 'geometric', not {first_generation!r}")
    return out


# ---------------------------------------------------------------- export


def progeny_histogram(totals: np.ndarray) -> list[tuple[str, int]]:
    totals = np.asarray(totals)
    finite = totals[totals != EXCEEDED]
    vals, cnt = np.unique(finite, return_counts=True)
    rows = [(str(int(v)), int(c)) for v, c in zip(vals, cnt)]
    over = int(np.sum(totals == EXCEEDED))
    if over:
        rows.append(("exceeded", over))
    return rows


def progeny_histogram_csv(totals: np.ndarray, fh=None) -> str | None:
    own = fh is None
    fh = io.StringIO() if own else fh
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["k", "count"])
    w.writerows(progeny_histogram(totals))
    return fh.getvalue() if own else None
