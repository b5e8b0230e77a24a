import csv
import io
import itertools
import math

import numpy as np
import pytest

from cayleywalk import Permutation, cayley_distance, compose, identity
from cayleywalk import _kernels as K
from cayleywalk import analytic as A
from cayleywalk.branching import (EXCEEDED, ModifiedBPConfig, gamma_graph, join_weights, modified_bp,
                                  modified_totals, pgw_total_progeny, pgw_totals, progeny_histogram_csv,
                                  shifted_geometric_bp, shifted_geometric_progeny_law,
                                  shifted_geometric_totals, weighted_component)
from cayleywalk.experiments import EmpiricalDist, borel_law, truncated_tv
from cayleywalk.samplers import derive, uniform_on_sphere_batch, uniform_permutation

N = 100_000


def test_gamma_graph_example():
    sigma = Permutation.parse("(1 2)(3)(4)")
    pi = Permutation.parse("(1 3)", 4)
    g = gamma_graph(sigma, pi)
    assert len(g.edges) == 1
    assert {g.vertex_of[0], g.vertex_of[2]} == set(g.edges[0])
    assert weighted_component(g, 1) == 3
    assert weighted_component(g, 4) == 1


def test_gamma_graph_identity_pi():
    sigma = Permutation.parse("(1 5 2)(3 4)(6)")
    g = gamma_graph(sigma, identity(6))
    assert g.edges == ()
    assert weighted_component(g, 1) == 3


def _check_pair(sigma, pi):
    g = gamma_graph(sigma, pi)
    assert sum(g.weights) == sigma.n
    assert len(g.edges) == cayley_distance(pi)
    w = join_weights(sigma.array, pi.array)
    roots = g.components()
    for x in range(1, sigma.n + 1):
        assert w[x - 1] == weighted_component(g, x)
    prod = compose(sigma, pi)
    for cyc in prod.cycles():
        assert len({roots[g.vertex_of[x - 1]] for x in cyc}) == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_gamma_bookkeeping_exhaustive(n):
    perms = [Permutation(p) for p in itertools.permutations(range(1, n + 1))]
    for sigma in perms:
        for pi in perms:
            _check_pair(sigma, pi)


@pytest.mark.parametrize("n", [6, 7, 30])
def test_gamma_bookkeeping_sampled(n):
    rng = derive(1, n)
    for _ in range(1000):
        _check_pair(uniform_permutation(n, rng), uniform_permutation(n, rng))


def test_shifted_geometric_limits():
    t = shifted_geometric_totals(0.999, 10_000, derive(2, 0))
    assert np.mean(t == 1) > 0.99
    s = shifted_geometric_bp(0.7, derive(2, 1))
    assert s.total >= 1 and s.total == sum(s.generations)


def test_shifted_geometric_tail_decays_exponentially():
    t = shifted_geometric_totals(0.6, N, derive(2, 2))
    u = np.arange(1, 30)
    tail = np.array([np.mean(t > x) for x in u])
    ok = tail > 0
    slope = np.polyfit(u[ok], np.log(tail[ok]), 1)[0]
    assert slope < -0.05


def test_extinction_probability():
    t = shifted_geometric_totals(0.4, N, derive(2, 3), cap=10_000)
    assert abs(np.mean(t != EXCEEDED) - 2 / 3) <= 0.01


def test_exact_progeny_law():
    law = shifted_geometric_progeny_law(0.6, 400, "one")
    assert abs(law.sum() - 1) <= 1e-9
    law_g = shifted_geometric_progeny_law(0.6, 400, "geometric")
    assert abs(law_g.sum() - 1) <= 1e-9
    assert abs(law[1] - 0.6) <= 1e-15  # the root has no children
    t = shifted_geometric_totals(0.6, N, derive(2, 4), first_generation="geometric")
    assert truncated_tv(EmpiricalDist.from_values(t), law_g, 50).tv <= 0.01
    # subcritical dual of p = 0.4 loses no mass, supercritical law does
    assert abs(shifted_geometric_progeny_law(0.4, 2000).sum() - 2 / 3) <= 1e-6


def test_modified_bp_terminal_root():
    cfg = ModifiedBPConfig(0.5, 0.999999)
    assert all(modified_bp(cfg, derive(3, s)).total == 1 for s in range(50))


def test_modified_bp_scalar_and_batch_agree():
    cfg = ModifiedBPConfig(0.6, 0.6)
    rng = derive(3, 1)
    scalar = np.array([modified_bp(cfg, rng, root_cycle=True).total for _ in range(20_000)])
    batch = modified_totals(cfg, 20_000, derive(3, 2), root_cycle=True)
    assert truncated_tv(EmpiricalDist.from_values(scalar), EmpiricalDist.from_values(batch), 50).tv <= 0.03


def test_ageing_collapse_and_heir_choice():
    cfg = ModifiedBPConfig(0.6, 0.6)
    first = modified_totals(cfg, N, derive(3, 3), root_cycle=True)
    last = modified_totals(cfg, N, derive(3, 4), root_cycle=True, heir="last")
    rand = modified_totals(cfg, N, derive(3, 5), root_cycle=True, heir="random")
    exact = shifted_geometric_progeny_law(0.6, 50, "geometric")
    d = {k: EmpiricalDist.from_values(v) for k, v in [("first", first), ("last", last), ("random", rand)]}
    for v in d.values():
        assert truncated_tv(v, exact, 50).tv <= 0.01
    assert truncated_tv(d["first"], d["last"], 50).tv <= 0.015
    assert truncated_tv(d["first"], d["random"], 50).tv <= 0.015
    with pytest.raises(ValueError):
        modified_totals(cfg, 10, derive(3, 6), heir="middle")


def test_pgw():
    t = pgw_totals(0.6, N, derive(4, 0))
    assert abs(np.mean(t == 1) - math.exp(-0.6)) <= 0.01
    assert truncated_tv(EmpiricalDist.from_values(t), borel_law(0.6), 50).tv <= 0.02
    s = pgw_totals(2.0, 20_000, derive(4, 1), cap=5000)
    assert abs(np.mean(s == EXCEEDED) - A.pgw_survival(2.0)) <= 0.01
    one = pgw_total_progeny(0.6, derive(4, 2))
    assert one.total == sum(one.generations)


def test_duality_conditioned_on_extinction():
    dc = A.duality_constants(0.4)
    t = shifted_geometric_totals(0.4, N, derive(5, 0), cap=10_000)
    ext = EmpiricalDist.from_values(t[t != EXCEEDED])
    assert truncated_tv(ext, shifted_geometric_progeny_law(dc.p_dual, 50), 50).tv <= 0.02


def test_pair_component_first_generation():
    # generation 0 of the exploration is |C_1(sigma)|, geometric with p = 1/(1+b)
    n, a = 1000, 0.25
    k = int(a * n)
    X = uniform_on_sphere_batch(n, k, 4000, derive(6, 0))
    sizes = np.array([K.element_cycle_sizes(x)[0] for x in X])
    p = 1 / (1 + A.b_of_a(a))
    law = np.array([0.0] + [(1 - p) ** (j - 1) * p for j in range(1, 51)])
    assert truncated_tv(EmpiricalDist.from_values(sizes), law, 50).tv <= 0.04


def test_supercritical_gamma_has_giant_component():
    fracs = []
    for n in (500, 1000, 2000):
        k = n // 2
        X = uniform_on_sphere_batch(n, k, 40, derive(6, n))
        f = [join_weights(X[2 * s], X[2 * s + 1]).max() / n for s in range(20)]
        fracs.append(np.mean(f))
    assert min(fracs) > 0.2
    assert fracs[-1] > 0.5 * fracs[0]


def test_histogram_csv():
    text = progeny_histogram_csv(np.array([1, 1, 3, EXCEEDED]))
    rows = list(csv.reader(io.StringIO(text)))
    assert rows == [["k", "count"], ["1", "2"], ["3", "1"], ["exceeded", "1"]]
