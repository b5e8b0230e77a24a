"""Samplers for the measures on S_n used throughout the package.

Every sampler takes an explicit ``numpy.random.Generator``; nothing touches
global random state. :class:`SeededRng` derives independent child streams from
one seed so replicated experiments do not depend on scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .analytic import b_of_a
from .perm import Permutation, identity
from .walk import WalkState, draw_transpositions


@dataclass(frozen=True)
class SeededRng:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream,)))

    def child(self, i: int) -> "SeededRng":
        return SeededRng(self.seed, i)


def derive(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the child stream ``keys`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededRng):
        return rng.generator()
    return np.random.default_rng(rng)


class SamplerError(RuntimeError):
    """A retry or step cap was exhausted."""


# ---------------------------------------------------------------- uniform


def uniform_permutation(n: int, rng) -> Permutation:
    """Uniform on S_n by sequential insertion: element i opens a new cycle
    with probability 1/i, otherwise follows a uniform earlier element."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = as_generator(rng)
    r = rng.integers(0, np.arange(1, n + 1))
    img = np.empty(n, dtype=np.int64)
    K.crp_fill(r, img)
    return Permutation._from_array(img)


def tilted_bernoulli_sequence(n: int, a: float, rng) -> np.ndarray:
    """Independent bits with P(bit_i = 1) = b(i-1) / (n + b(i-1))."""
    rng = as_generator(rng)
    b = b_of_a(a)
    i = np.arange(n, dtype=np.float64)
    beta = b * i / (n + b * i)
    return (rng.random(n) < beta).astype(np.int8)


# ---------------------------------------------------------------- logarithmic law


@lru_cache(maxsize=64)
def _log_cdf(xi: float, top: int) -> np.ndarray:
    j = np.arange(1, top + 1, dtype=np.float64)
    logp = j * math.log(xi) - np.log(j) - math.log(-math.log1p(-xi))
    cdf = np.empty(top + 1)
    cdf[0] = 0.0
    cdf[1:] = np.cumsum(np.exp(logp))
    cdf.setflags(write=False)
    return cdf


def logarithmic_cdf(xi: float, top: int | None = None) -> np.ndarray:
    """cdf[j] = P(X <= j) for j = 0..top, where P(X = j) = xi^j / (j (-log(1 - xi)))."""
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    if top is None:
        # beyond this point the remaining mass is below 1e-17
        top = int(min(10**7, max(64, math.ceil(45.0 / -math.log(xi)))))
    return _log_cdf(float(xi), int(top))


def logarithmic_mean(xi: float) -> float:
    return xi / ((1.0 - xi) * -math.log1p(-xi))


def logarithmic_samples(xi: float, size: int, rng) -> np.ndarray:
    rng = as_generator(rng)
    cdf = logarithmic_cdf(xi)
    u = rng.random(size)
    out = np.searchsorted(cdf, u, side="left").astype(np.int64)
    out[out < 1] = 1
    # mass beyond the table is < 1e-17; extend by direct search if ever hit
    for idx in np.nonzero(out > cdf.size - 1)[0]:
        j, acc = cdf.size - 1, cdf[-1]
        lnorm = math.log(-math.log1p(-xi))
        while acc < u[idx]:
            j += 1
            acc += math.exp(j * math.log(xi) - math.log(j) - lnorm)
        out[idx] = j
    return out


def logarithmic_sample(xi: float, rng) -> int:
    return int(logarithmic_samples(xi, 1, rng)[0])


# ---------------------------------------------------------------- sphere


@dataclass(frozen=True)
class SpherePlan:
    n: int
    k: int
    m: int
    xi: float


def sphere_plan(n: int, k: int) -> SpherePlan:
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 <= k <= n - 1:
        raise ValueError(f"sphere radius {k} outside 0..{n - 1}")
    m = n - k
    if k == 0 or m == 1:
        return SpherePlan(n, k, m, float("nan"))
    b = b_of_a(k / n)
    xi = b / (1.0 + b)
    if abs(m * logarithmic_mean(xi) - n) > 0.5:
        raise ArithmeticError(f"mean matching failed: m E[X] = {m * logarithmic_mean(xi)} vs n = {n}")
    return SpherePlan(n, k, m, xi)


def sphere_cycle_sizes(n: int, k: int, count: int, rng, max_attempts: int = 10**6) -> np.ndarray:
    """``count`` rows of exchangeable cycle sizes of a uniform element of the sphere.

    Rows are i.i.d. logarithmic(xi) vectors of length m = n - k conditioned on
    summing to n, obtained by rejection. ``max_attempts`` caps the rejection
    attempts per accepted row.
    """
    plan = sphere_plan(n, k)
    rng = as_generator(rng)
    m = plan.m
    if k == 0:
        return np.ones((count, n), dtype=np.int64)
    if m == 1:
        return np.full((count, 1), n, dtype=np.int64)
    cdf = logarithmic_cdf(plan.xi, n)
    sizes = np.zeros((count, m), dtype=np.int64)
    done = np.zeros(1, dtype=np.int64)
    attempts = np.zeros(1, dtype=np.int64)
    chunk = max(4096, 64 * m)
    while done[0] < count:
        u = rng.random(chunk)
        K.kolchin_fill(u, cdf, m, n, sizes, done, attempts)
        if attempts[0] > max_attempts * max(1, int(done[0]) + 1):
            raise SamplerError(f"sphere sampler exceeded {max_attempts} attempts per sample")
    return sizes


def uniform_on_sphere_batch(n: int, k: int, count: int, rng, max_attempts: int = 10**6) -> np.ndarray:
    """``count`` uniform permutations at distance k, as a (count, n) 0-based image array."""
    rng = as_generator(rng)
    sizes = sphere_cycle_sizes(n, k, count, rng, max_attempts)
    orders = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (count, 1)), axis=1)
    out = np.empty((count, n), dtype=np.int64)
    K.blocks_to_perm_batch(orders, sizes, out)
    return out


def uniform_on_sphere(n: int, k: int, rng, max_attempts: int = 10**6) -> Permutation:
    """Exactly uniform over permutations with n - k cycles."""
    return Permutation._from_array(uniform_on_sphere_batch(n, k, 1, rng, max_attempts)[0])


# ---------------------------------------------------------------- hitting laws


@dataclass(frozen=True)
class HittingSample:
    perm: Permutation
    hitting_steps: int
    fragmentations: int
    attempts: int = 1
    path: tuple[np.ndarray, np.ndarray] | None = None  # 0-based (ti, tj) of the walk

    @property
    def distance(self) -> int:
        return self.perm.n - self.perm.cycle_count()


def sphere_radius(n: int, a: float) -> int:
    """floor(a n), guarded against products like 0.29 * 100 = 28.999..."""
    return int(math.floor(a * n + 1e-9))


def hitting_sample(n: int, a: float, rng, step_cap: int | None = None,
                   keep_path: bool = False) -> HittingSample:
    """Walk from the identity until the distance first equals floor(a n)."""
    if n < 1 or a <= 0:
        raise ValueError("need n >= 1 and a > 0")
    rng = as_generator(rng)
    target = sphere_radius(n, a)
    if target == 0:
        e = np.zeros(0, dtype=np.int64)
        return HittingSample(identity(n), 0, 0, 1, (e, e) if keep_path else None)
    if a > 1.0 - 5.0 * math.log(n) / n:
        raise ValueError(f"a = {a} too close to 1 for n = {n}; hitting times blow up")
    cap = 50 * n if step_cap is None else int(step_cap)
    state = WalkState(n)
    chunk = max(64, target + 16 * int(math.isqrt(n)))
    kept_i, kept_j = [], []
    while True:
        room = cap - state.steps
        if room <= 0:
            raise SamplerError(f"no hit of distance {target} within {cap} steps")
        ti, tj = draw_transpositions(n, min(chunk, room), rng)
        kinds, dists = state.apply(ti, tj, stop_dist=target)
        if keep_path:
            kept_i.append(ti[:kinds.size])
            kept_j.append(tj[:kinds.size])
        if dists.size and dists[-1] == target:
            break
        chunk = max(64, chunk // 4)
    path = (np.concatenate(kept_i), np.concatenate(kept_j)) if keep_path else None
    return HittingSample(state.perm, state.steps, state.frag_total, 1, path)


def nu0_sample(n: int, a: float, rng, max_attempts: int = 10**6,
               keep_path: bool = False) -> HittingSample:
    """Hitting law conditioned on no fragmentation, by rejection.

    Without fragmentation the walk reaches distance floor(a n) after exactly
    that many steps, so each attempt draws those steps and aborts early at the
    first fragmentation.
    """
    if not 0 < a < 0.5:
        raise ValueError("nu0 sampler needs 0 < a < 1/2")
    rng = as_generator(rng)
    target = sphere_radius(n, a)
    if target == 0:
        e = np.zeros(0, dtype=np.int64)
        return HittingSample(identity(n), 0, 0, 1, (e, e) if keep_path else None)
    for attempt in range(1, max_attempts + 1):
        state = WalkState(n)
        ti, tj = draw_transpositions(n, target, rng)
        kinds, _ = state.apply(ti, tj, abort_on_frag=True)
        if state.frag_total == 0:
            return HittingSample(state.perm, target, 0, attempt, (ti, tj) if keep_path else None)
    raise SamplerError(f"nu0 sampler exceeded {max_attempts} attempts")
