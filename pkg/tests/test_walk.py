import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cayleywalk import COAGULATION, FRAGMENTATION, Transposition, identity
from cayleywalk import _kernels as K
from cayleywalk import analytic as A
from cayleywalk.samplers import derive
from cayleywalk.walk import (WalkState, component_stats, draw_transpositions, endpoint_distance,
                             extra_fragment_cycles, run, trace_from_transpositions)


def test_draw_transpositions_uniform():
    ti, tj = draw_transpositions(5, 200_000, derive(1, 0))
    assert np.all(ti < tj)
    codes = ti * 5 + tj
    _, counts = np.unique(codes, return_counts=True)
    assert counts.size == 10
    assert counts.min() > 0.95 * 20_000 and counts.max() < 1.05 * 20_000


def test_first_step_coagulates():
    for s in range(20):
        st_ = WalkState(10)
        assert st_.step(derive(2, s)).kind == COAGULATION


def test_two_points_alternate():
    st_ = WalkState(2)
    rng = derive(2, 0)
    kinds = [st_.step(rng).kind for _ in range(6)]
    assert kinds == [COAGULATION, FRAGMENTATION] * 3


def test_empty_trace():
    tr = run(5, 0, derive(3, 0))
    assert tr.endpoint == identity(5) and len(tr) == 0
    assert list(tr.distance_series) == [0]


def test_single_fragmentation_leaves_one_extra_cycle():
    st_ = WalkState(6)
    st_.apply_transposition(Transposition(1, 2))
    ev = st_.apply_transposition(Transposition(1, 2))
    assert ev.kind == FRAGMENTATION and ev.distance_after == 0
    assert extra_fragment_cycles(st_) == 1
    cs = component_stats(st_)
    assert cs.unicyclic == 1 and cs.unicyclic_weight == 2 and cs.trees == 4


def test_fresh_state_stats():
    cs = component_stats(WalkState(7))
    assert cs.count == 7 and cs.trees == 7 and cs.size_hist == {1: 7} and cs.unicyclic == 0


def _check_invariants(st_, steps, prev_comps):
    n = st_.n
    roots = st_.roots()
    img = st_.img
    for x in range(n):
        assert roots[x] == roots[img[x]]  # cycles sit inside components
    assert st_.distance == n - K.count_cycles(img)
    assert st_.distance <= steps
    assert (st_.distance == steps) == (st_.frag_total == 0)
    assert st_.component_count <= prev_comps
    assert abs(st_.distance - (n - st_.component_count)) == st_.extra_frag_cycles
    cs = component_stats(st_)
    assert (st_.frag_total == 0) == (cs.trees == cs.count)
    r = np.unique(roots)
    assert np.all(st_.dedge[r] >= st_.dsz[r] - 1)
    assert sum(k * v for k, v in cs.size_hist.items()) == n


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 120), st.integers(0, 2**32 - 1))
def test_invariants_along_traces(n, steps, seed):
    rng = np.random.default_rng(seed)
    st_ = WalkState(n)
    prev = n
    for t in range(1, steps + 1):
        st_.step(rng)
        _check_invariants(st_, t, prev)
        prev = st_.component_count


def test_trace_round_trip_and_csv():
    tr = run(30, 40, derive(4, 0), seed=4)
    again = trace_from_transpositions(30, tr.tj, tr.ti)  # order inside a pair is irrelevant
    assert again.endpoint == tr.endpoint
    p = identity(30)
    from cayleywalk import apply_transposition
    for ev in tr.events:
        p, kind = apply_transposition(p, ev.t)
        assert kind == ev.kind and p.n - p.cycle_count() == ev.distance_after
    assert p == tr.endpoint
    rows = list(csv.DictReader(io.StringIO(tr.to_csv())))
    assert len(rows) == 40 and set(rows[0]) == {"step", "i", "j", "kind", "distance"}
    assert int(rows[-1]["distance"]) == tr.distance_series[-1]
    assert tr.fragmentations == sum(r["kind"] == FRAGMENTATION for r in rows)


def test_apply_rejects_bad_transpositions():
    st_ = WalkState(4)
    with pytest.raises(ValueError):
        st_.apply(np.array([2]), np.array([1]))
    with pytest.raises(ValueError):
        st_.apply(np.array([0]), np.array([4]))


def test_stop_and_abort_flags():
    st_ = WalkState(50)
    ti, tj = draw_transpositions(50, 200, derive(5, 0))
    kinds, dists = st_.apply(ti, tj, stop_dist=10)
    assert dists[-1] == 10 and np.all(dists[:-1] != 10)
    st2 = WalkState(6)
    kinds, _ = st2.apply(np.array([0, 0, 1]), np.array([1, 1, 2]), abort_on_frag=True)
    assert kinds.tolist() == [0, 1] and st2.steps == 2


@pytest.mark.parametrize("c,target", [(0.8, 0.4), (2.0, None)])
def test_speed_means(c, target):
    n = 2000
    target = A.u_series(c) if target is None else target
    d = [endpoint_distance(n, int(c * n / 2), derive(6, r))[0] / n for r in range(100)]
    assert abs(np.mean(d) - target) <= 0.02


def test_unicyclic_weight_below_bound():
    n, c = 2000, 0.8
    w = []
    for r in range(300):
        st_ = WalkState(n)
        ti, tj = draw_transpositions(n, int(c * n / 2), derive(7, r))
        st_.apply(ti, tj)
        w.append(component_stats(st_).unicyclic_weight)
    w = np.array(w, dtype=float)
    assert w.mean() <= A.unicyclic_bound(c) + 3 * w.std(ddof=1) / math.sqrt(w.size)


def test_extra_cycles_scale_like_sqrt_n():
    ratios = []
    for n in (500, 1000, 2000, 4000):
        vals = []
        for r in range(40):
            st_ = WalkState(n)
            ti, tj = draw_transpositions(n, n, derive(8, n, r))
            st_.apply(ti, tj)
            vals.append(extra_fragment_cycles(st_))
        ratios.append(np.mean(vals) / math.sqrt(n))
    assert max(ratios) < 2.0
    assert max(ratios) / max(min(ratios), 1e-9) < 3.0
