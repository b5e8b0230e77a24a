"""Closed forms and series for the scalar limit objects.

Series with factorial-type terms are summed in log space. Summation stops
once a term drops below ``series_tol`` times the running sum; running out of
``max_terms`` first raises :class:`SeriesError`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, lambertw

from .perm import CycleStructure

LOG2 = math.log(2.0)
UNIFORM_THRESHOLD = 1.0 - LOG2
HITTING_THRESHOLD = 0.25


class SeriesError(ArithmeticError):
    pass


@dataclass(frozen=True)
class AnalyticConfig:
    series_tol: float = 1e-12
    max_terms: int = 100_000
    fixedpoint_tol: float = 1e-12

    def __post_init__(self):
        if not (self.series_tol > 0 and self.fixedpoint_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_terms < 100:
            raise ValueError("max_terms must be at least 100")


DEFAULT = AnalyticConfig()
_CHUNK = 4096


def _sum_series(log_abs_term, cfg: AnalyticConfig, start: int = 1, sign=None) -> float:
    """Sum ``sign(k) * exp(log_abs_term(k))`` for k = start, start+1, ...

    For positive series the remainder past the stopping index is added as a
    midpoint integral of the continuous extension; near-critical tails decay
    only polynomially and would otherwise be cut at ~1e-8.
    """
    total = 0.0
    abs_total = 0.0
    k0 = start
    while k0 - start < cfg.max_terms:
        k = np.arange(k0, min(k0 + _CHUNK, start + cfg.max_terms), dtype=np.float64)
        mag = np.exp(log_abs_term(k))
        running = abs_total + np.cumsum(mag)
        small = np.nonzero(mag < cfg.series_tol * running)[0]
        stop = small[0] + 1 if small.size else mag.size
        vals = mag[:stop] if sign is None else sign(k[:stop]) * mag[:stop]
        total += float(np.sum(vals))
        abs_total = float(running[stop - 1])
        if small.size:
            if sign is None:
                kk = float(k[stop - 1]) + 0.5
                f = lambda x: float(np.exp(log_abs_term(np.float64(x))))
                tail, _ = integrate.quad(f, kk, np.inf, epsabs=0.0, epsrel=1e-8, limit=200)
                total += tail
            return total
        k0 += _CHUNK
    raise SeriesError(f"series did not reach tolerance within {cfg.max_terms} terms")


def _log_borel_q(c: float, k):
    return -math.log(c) + (k - 2) * np.log(k) - gammaln(k + 1) + k * (math.log(c) - c)


def u_series(c: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """Limit of distance/n after cn/2 steps, from the cluster-size series."""
    if c < 0:
        raise ValueError("c must be non-negative")
    if c == 0:
        return 0.0
    s = _sum_series(lambda k: _log_borel_q(c, k), cfg)
    return 1.0 - s


def u_closed_form(c: float) -> float:
    """Same limit through the tree function T(z) = -W(-z), z = c e^{-c}.

    Uses sum_k k^{k-2} z^k / k! = T - T^2/2; kept as an independent check on
    :func:`u_series`.
    """
    if c == 0:
        return 0.0
    z = c * math.exp(-c)
    # W is singular at -1/e (c = 1), where T = 1
    t = 1.0 if z >= math.exp(-1.0) - 1e-15 else float(np.real(-lambertw(-z, 0)))
    return 1.0 - (t - t * t / 2.0) / c


def pgw_survival(c: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """Largest root of theta = 1 - exp(-c theta); zero for c <= 1."""
    if c < 0:
        raise ValueError("c must be non-negative")
    if c <= 1.0:
        return 0.0
    # g is convex and increasing at its largest root, so Newton from 1
    # decreases monotonically onto it
    th = 1.0
    for _ in range(500):
        e = math.exp(-c * th)
        g = th - 1.0 + e
        if abs(g) <= cfg.fixedpoint_tol:
            return th
        th -= g / (1.0 - c * e)
    raise SeriesError(f"survival fixed point did not converge at c={c}")


def u_integral(c: float, cfg: AnalyticConfig = DEFAULT, variant: str = "scaled") -> float:
    """c/2 minus the integrated fragmentation rate.

    ``variant="scaled"`` integrates theta(2s)^2 over s in [0, c/2] (the branching
    mean at walk time s*n is 2s). ``variant="literal"`` integrates theta(s)^2
    over the same range; it is kept only to show it disagrees with the series.
    """
    if c < 0:
        raise ValueError("c must be non-negative")
    if variant == "scaled":
        f = lambda s: pgw_survival(2.0 * s, cfg) ** 2
        kink = 0.5
    elif variant == "literal":
        f = lambda s: pgw_survival(s, cfg) ** 2
        kink = 1.0
    else:
        raise ValueError(f"unknown variant {variant!r}")
    hi = c / 2.0
    if hi <= kink:
        return hi  # theta vanishes on the whole range
    val, err = integrate.quad(f, kink, hi, epsabs=1e-12, epsrel=1e-11, limit=200)
    if not np.isfinite(val) or err > 1e-9:
        raise ArithmeticError(f"quadrature failed at c={c} (error estimate {err:.2e})")
    return hi - val


def u_inverse(a: float, cfg: AnalyticConfig = DEFAULT, hi: float = 50.0, tol: float = 1e-10) -> float:
    """Bisection for u(c) = a on [0, hi]; u is increasing."""
    if not 0 <= a < u_series(hi, cfg):
        raise ValueError(f"a={a} outside the range of u on [0, {hi}]")
    if a <= 0.5:
        return 2.0 * a
    lo = 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if u_series(mid, cfg) < a:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def b_of_a(a: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """Positive root b of log(1+b)/b = 1 - a."""
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    target = 1.0 - a
    g = lambda b: math.log1p(b) / b - target
    lo = a  # log1p(a)/a > 1 - a/2 > 1 - a
    hi = max(2.0, 4.0 * a)
    while g(hi) > 0:
        hi *= 2.0
    b = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(b)


def xi_of_a(a: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """Inverse of f(xi) = 1 + (1 - xi) log(1 - xi) / xi, i.e. b / (1 + b)."""
    b = b_of_a(a, cfg)
    return b / (1.0 + b)


def borel_q(c: float, k):
    """(1/c) k^{k-2}/k! (c e^{-c})^k; scalar or array k >= 1."""
    k_arr = np.asarray(k, dtype=np.float64)
    if np.any(k_arr < 1):
        raise ValueError("k must be >= 1")
    if c <= 0:
        raise ValueError("c must be positive")
    out = np.exp(_log_borel_q(c, k_arr))
    return float(out) if out.ndim == 0 else out


def borel_p(c: float, k):
    """Borel mass k q_k: total progeny law of Poisson(c) branching."""
    k_arr = np.asarray(k, dtype=np.float64)
    out = k_arr * np.asarray(borel_q(c, k_arr))
    return float(out) if out.ndim == 0 else out


def kappa(c: float) -> float:
    """Mean number of fragmentations before time cn/2, c < 1."""
    if not 0 <= c < 1:
        raise ValueError("kappa needs 0 <= c < 1")
    return -(math.log1p(-c) + c) / 2.0


# ---------------------------------------------------------------- counting


def _cycle_factor(m: int) -> tuple[int, int]:
    # m^{m-2} / (m-1)! as an exact fraction; m = 1 gives 1/1
    if m == 1:
        return 1, 1
    return m ** (m - 2), math.factorial(m - 1)


def geodesic_count_formula(cs: CycleStructure) -> int:
    """Number of minimal transposition factorisations of a permutation of type cs."""
    t = cs.distance
    num, den = math.factorial(t), 1
    for m, a in cs.counts:
        fn, fd = _cycle_factor(m)
        num *= fn**a
        den *= fd**a
    q, r = divmod(num, den)
    if r:
        raise ArithmeticError(f"non-integral geodesic count for {cs}")
    return q


def _log_rn_weight(cs: CycleStructure) -> float:
    return sum(a * ((m - 2) * math.log(m) - math.lgamma(m)) for m, a in cs.counts)


def radon_nikodym_ratio(cs1: CycleStructure, cs2: CycleStructure) -> float:
    """Ratio of hitting-to-uniform densities at two permutations on one sphere."""
    if cs1.n != cs2.n:
        raise ValueError("cycle types live on different ground sets")
    if cs1.distance != cs2.distance:
        raise ValueError("cycle types lie on different spheres")
    return math.exp(_log_rn_weight(cs1) - _log_rn_weight(cs2))


@lru_cache(maxsize=None)
def _stirling_row(n: int) -> tuple[int, ...]:
    # unsigned Stirling numbers of the first kind c(n, m), m = 0..n
    if n == 0:
        return (1,)
    prev = _stirling_row(n - 1)
    row = [0] * (n + 1)
    for m in range(1, n + 1):
        row[m] = prev[m - 1] + (n - 1) * (prev[m] if m < n else 0)
    return tuple(row)


def stirling1(n: int, m: int) -> int:
    if n < 0 or m < 0:
        raise ValueError("negative argument")
    if m > n:
        return 0
    for k in range(0, n, 256):  # fill the cache without deep recursion
        _stirling_row(k)
    return _stirling_row(n)[m]


def sphere_size_exact(n: int, k: int) -> int:
    """Number of permutations of n elements at distance k from the identity."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 <= k <= n - 1:
        raise ValueError("k must lie in 0..n-1")
    return stirling1(n, n - k)


class LogStirling:
    """Rows of log c(n, m) by the floating two-term recurrence."""

    def __init__(self):
        self._n = 0
        self._row = np.array([0.0])
        self._kept: dict[int, np.ndarray] = {0: self._row}

    def row(self, n: int) -> np.ndarray:
        if n in self._kept:
            return self._kept[n]
        if n < self._n:
            self.__init__()
        row = self._row
        for i in range(self._n + 1, n + 1):
            new = np.full(i + 1, -np.inf)
            # c(i, m) = c(i-1, m-1) + (i-1) c(i-1, m)
            with np.errstate(divide="ignore"):
                new[1:] = row
                new[:i] = np.logaddexp(new[:i], math.log(i - 1) + row if i > 1 else -np.inf)
            row = new
        self._n, self._row = n, row
        self._kept[n] = row
        return row


_LOG_STIRLING = LogStirling()


def log_sphere_size(n: int, k: int) -> float:
    if not 0 <= k <= n - 1:
        raise ValueError("k must lie in 0..n-1")
    if n <= 40:
        return math.log(sphere_size_exact(n, k))
    return float(_LOG_STIRLING.row(n)[n - k])


def ball_log_volume(n: int, a: float) -> float:
    """log |B(I, floor(a n))|."""
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    k = int(math.floor(a * n + 1e-9))
    if n <= 40:
        return math.log(sum(sphere_size_exact(n, j) for j in range(k + 1)))
    row = _LOG_STIRLING.row(n)
    return float(np.logaddexp.reduce(row[n - k:]))


def unicyclic_bound(c: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """Series bound on the expected number of vertices in unicyclic components."""
    if not 0 <= c < 1:
        raise ValueError("unicyclic bound needs 0 <= c < 1")
    if c == 0:
        return 0.0
    lz = math.log(c) - c
    s = _sum_series(lambda k: (k + 0.5) * np.log(k) - gammaln(k + 1) + k * lz, cfg, start=2)
    return math.sqrt(math.pi / 8.0) * s


# ---------------------------------------------------------------- duality


@dataclass(frozen=True)
class DualityConstants:
    p: float
    alpha: float
    p_dual: float
    a: float
    a_dual: float

    @property
    def residual(self) -> float:
        return abs(self.p / self.alpha + self.alpha * (1 - self.p) - 1.0)


def radius_of_p(p: float) -> float:
    """a = 1 + p log p / (1 - p)."""
    return 1.0 + p * math.log(p) / (1.0 - p)


def duality_constants(p: float) -> DualityConstants:
    """Extinction probability and dual parameters for offspring (1-p)^j p."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    a = radius_of_p(p)
    if p >= 0.5:
        return DualityConstants(p, 1.0, p, a, a)
    # alpha^2 (1-p) - alpha + p = 0; smaller root via the stable form
    disc = math.sqrt(1.0 - 4.0 * p * (1.0 - p))
    alpha = 2.0 * p / (1.0 + disc)
    p_dual = p / alpha
    out = DualityConstants(p, alpha, p_dual, a, radius_of_p(p_dual))
    if out.residual > 1e-12:
        raise ArithmeticError(f"extinction equation residual {out.residual:.2e} at p={p}")
    return out


def gromov_delta_hitting(a: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """Limit of (x|y)_I / n for x, y drawn from the hitting law, 1/4 <= a < 1/2."""
    if not HITTING_THRESHOLD <= a < 0.5:
        raise ValueError("hitting-law delta is defined here for 1/4 <= a < 1/2")
    c = u_inverse(a, cfg)
    return a - u_series(2.0 * c, cfg) / 2.0


def gromov_delta_uniform(a: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """Limit of (sigma|pi)_I / n for sigma, pi uniform on the sphere, a > 1 - log 2."""
    if not UNIFORM_THRESHOLD < a < 1:
        raise ValueError("uniform-law delta needs 1 - log 2 < a < 1")
    p = 1.0 / (1.0 + b_of_a(a, cfg))
    dc = duality_constants(p)
    cycle_density = dc.alpha**2 * (1.0 - 2.0 * dc.a_dual)
    return a - (1.0 - cycle_density) / 2.0


# ---------------------------------------------------------------- support size


N_GRID = (200, 400, 800, 1600)


@dataclass(frozen=True)
class SupportGamma:
    a: float
    xi: float
    c1: float
    c2: float
    gamma: float
    n_grid: tuple[int, ...]
    c2_samples: tuple[float, ...]
    fit_residual: float


def hitting_entropy_rate(a: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """c1 = -(a + sum_k q_k log p_k) with c = 2a."""
    if not 0 < a < 0.5:
        raise ValueError("needs 0 < a < 1/2")
    c = 2.0 * a

    def log_term(k):
        return _log_borel_q(c, k) + np.log(-(np.log(k) + _log_borel_q(c, k)))

    # log p_k < 0 for every k, so each term is -q_k |log p_k|
    s = -_sum_series(log_term, cfg)
    return -(a + s)


def sphere_growth_samples(a: float, n_grid=N_GRID) -> np.ndarray:
    """(log|sphere(n, floor(a n))| - a n log n) / n over the grid."""
    out = []
    for n in n_grid:
        k = int(math.floor(a * n + 1e-9))
        out.append((log_sphere_size(n, k) - a * n * math.log(n)) / n)
    return np.array(out)


def sphere_growth_extrapolated(a: float, n_grid=N_GRID) -> tuple[float, float]:
    """Least-squares fit of c2 + A log(n)/n + B/n; returns (c2, max residual)."""
    n = np.asarray(n_grid, dtype=np.float64)
    y = sphere_growth_samples(a, n_grid)
    X = np.column_stack([np.ones_like(n), np.log(n) / n, 1.0 / n])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.max(np.abs(X @ coef - y)))
    return float(coef[0]), resid


def sphere_growth_kolchin(a: float, cfg: AnalyticConfig = DEFAULT) -> float:
    """c2 from Stirling's formula applied to the conditioned-sum count.

    With xi = b/(1+b) and L = log(1+b) the count is
    n! L^m / (xi^n m!) P(S_m = n), m = (1-a) n, and P(S_m = n) is only
    polynomially small, so only the exponential terms survive.
    """
    b = b_of_a(a, cfg)
    xi = b / (1.0 + b)
    return -a - (1 - a) * math.log(1 - a) + (1 - a) * math.log(math.log1p(b)) - math.log(xi)


def support_gamma(a: float, cfg: AnalyticConfig = DEFAULT, n_grid=N_GRID) -> SupportGamma:
    if not 0 < a < 0.5:
        raise ValueError("the support exponent is computed for 0 < a < 1/2")
    c1 = hitting_entropy_rate(a, cfg)
    c2, resid = sphere_growth_extrapolated(a, n_grid)
    return SupportGamma(
        a=a,
        xi=xi_of_a(a, cfg),
        c1=c1,
        c2=c2,
        gamma=c1 - c2,
        n_grid=tuple(n_grid),
        c2_samples=tuple(sphere_growth_samples(a, n_grid).tolist()),
        fit_residual=resid,
    )
