import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cayleywalk import (COAGULATION, FRAGMENTATION, CycleStructure, Permutation, Transposition,
                        apply_transposition, canonical_decomposition, cayley_distance, compose,
                        cycle_structure, identity, inverse)

from conftest import all_perms, bfs_distances

perms = st.integers(1, 12).flatmap(lambda n: st.permutations(list(range(1, n + 1)))).map(Permutation)


def test_compose_convention():
    f = Permutation.parse("(1 2)", 3)
    g = Permutation.parse("(2 3)", 3)
    assert compose(f, g) == Permutation.parse("(1 2 3)")
    assert (f * g)(3) == f(g(3)) == 1


def test_listed_decomposition_reproduces_pi():
    pi = Permutation.parse("(1 4 3 7)(2)(5 8)(6 10 9)")
    ts = [(1, 4), (4, 3), (3, 7), (5, 8), (6, 10), (10, 9)]
    prod = identity(10)
    for i, j in ts:
        prod = compose(prod, Permutation.parse(f"({i} {j})", 10))
    assert prod == pi
    dec = canonical_decomposition(pi)
    assert [(t.i, t.j) for t in dec.transpositions] == [tuple(sorted(t)) for t in ts]
    assert len(dec) == cayley_distance(pi) == 6
    assert dec.product(10) == pi


def test_far_apart_geodesic_pair():
    sigma = Permutation.parse("(1 14 5 11)(2)(3 9)(4 13 6)(7 12 8)(10)")
    pi1 = Permutation.parse("(4 13 6)(7 12 8)", 14)
    pi2 = Permutation.parse("(1 14 5 11)(3 9)", 14)
    assert cayley_distance(sigma) == 8
    assert sorted(cycle_structure(sigma).lengths()) == [1, 1, 2, 3, 3, 4]
    assert cayley_distance(pi1) + cayley_distance(pi1, sigma) == 8
    assert cayley_distance(pi2) + cayley_distance(pi2, sigma) == 8
    assert cayley_distance(compose(pi1, inverse(pi2))) == 8
    assert cayley_distance(pi1, pi2) == 8
    assert compose(pi1, inverse(pi2)) == Permutation.parse("(11 5 14 1)(2)(9 3)(4 13 6)(7 12 8)(10)")


def test_parse_and_format_round_trip():
    p = Permutation.parse("(1 3)(2)(4 6 5)")
    assert str(p) == "(1 3)(2)(4 6 5)"
    assert Permutation.parse(str(p)) == p
    assert Permutation.parse("(1 2)", n=5).n == 5
    assert Permutation.parse("()", n=3) == identity(3)
    for bad in ["(1 2", "(1 1)", "(0 2)", "(a b)"]:
        with pytest.raises(ValueError):
            Permutation.parse(bad)


def test_invalid_constructions():
    with pytest.raises(ValueError):
        Permutation([1, 1, 2])
    with pytest.raises(ValueError):
        Transposition(2, 2)
    with pytest.raises(ValueError):
        compose(identity(3), identity(4))
    with pytest.raises(ValueError):
        identity(0)


def test_basic_identities():
    assert inverse(identity(4)) == identity(4)
    t = Permutation.parse("(2 5)", 6)
    assert inverse(t) == t
    assert cayley_distance(t) == 1
    cs = cycle_structure(identity(7))
    assert cs.as_dict() == {1: 7} and cs.distance == 0
    assert cycle_structure(Permutation.parse("(1 4 3 7)(2)(5 8)(6 10 9)")).cycle_count == 4


def test_apply_transposition_examples():
    p, kind = apply_transposition(identity(3), Transposition(1, 2))
    assert p == Permutation.parse("(1 2)", 3) and kind == COAGULATION
    q, kind = apply_transposition(p, Transposition(1, 2))
    assert q == identity(3) and kind == FRAGMENTATION


def test_apply_transposition_exhaustive_s5():
    for sigma in all_perms(5):
        d = cayley_distance(sigma)
        for i, j in itertools.combinations(range(1, 6), 2):
            p, kind = apply_transposition(sigma, Transposition(i, j))
            assert p == compose(sigma, Permutation.parse(f"({i} {j})", 5))
            delta = cayley_distance(p) - d
            assert delta == (1 if kind == COAGULATION else -1)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_distance_matches_bfs(n):
    dist = bfs_distances(n)
    for img, d in dist.items():
        p = Permutation._from_array(np.array(img))
        assert cayley_distance(p) == p.n - p.cycle_count() == d


def test_pairwise_distance_matches_bfs_s4():
    dist = bfs_distances(4)
    ps = list(all_perms(4))
    for x in ps:
        for y in ps:
            rel = compose(inverse(x), y)
            assert cayley_distance(x, y) == dist[tuple(rel.array.tolist())]


@settings(max_examples=300, deadline=None)
@given(perms)
def test_inverse_preserves_cycle_type(p):
    assert cycle_structure(inverse(p)) == cycle_structure(p)
    assert compose(p, inverse(p)) == identity(p.n)


@settings(max_examples=300, deadline=None)
@given(perms)
def test_canonical_decomposition_round_trip(p):
    dec = canonical_decomposition(p)
    assert dec.product(p.n) == p
    assert len(dec) == cayley_distance(p)
    # consecutive transpositions of one cycle share exactly one element
    for cyc in p.cycles(include_fixed=False):
        run = [t for t in dec.transpositions if t.i in cyc]
        for s, t in zip(run, run[1:]):
            assert len({s.i, s.j} & {t.i, t.j}) == 1
        inner = cyc[1:-1]
        for x in inner:
            assert sum(x in (t.i, t.j) for t in run) == 2
            assert x not in dec.terminal


@settings(max_examples=200, deadline=None)
@given(perms, st.data())
def test_cycle_count_changes_by_one(p, data):
    if p.n < 2:
        return
    i = data.draw(st.integers(1, p.n - 1))
    j = data.draw(st.integers(i + 1, p.n))
    q, kind = apply_transposition(p, Transposition(i, j))
    assert q.cycle_count() - p.cycle_count() == (1 if kind == FRAGMENTATION else -1)


def test_cycle_structure_representative():
    cs = CycleStructure.from_lengths([3, 2, 2, 1])
    assert cycle_structure(cs.representative()) == cs
    assert cs.n == 8 and cs.distance == 4
