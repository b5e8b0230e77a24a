import csv
import io
import json

import numpy as np
import pytest

from cayleywalk import experiments as E
from cayleywalk.samplers import derive


def test_empirical_dist():
    d = E.EmpiricalDist.from_values([1, 2, 2, 5])
    assert d.total == 4 and d.counts == {1: 1, 2: 2, 5: 1}
    assert d.pmf(2) == 0.5 and d.mean() == 2.5
    with pytest.raises(ValueError):
        E.EmpiricalDist.from_values([])
    with pytest.raises(ValueError):
        E.EmpiricalDist({1: 2}, 3)


def test_tv_examples():
    d = E.EmpiricalDist.from_values([1, 1, 2, 3])
    assert E.tv_distance(d, d) == 0
    assert E.tv_distance(d, E.EmpiricalDist.from_values([7, 8])) == 1
    g1 = E.EmpiricalDist.from_values(derive(1, 0).geometric(0.3, 100_000))
    g2 = E.EmpiricalDist.from_values(derive(1, 1).geometric(0.3, 100_000))
    assert E.tv_distance(g1, g2) <= 0.01
    assert E.tv_distance(g1, E.geometric_law(0.3), cap=50) <= 0.01
    with pytest.raises(ValueError):
        E.tv_distance(g1, E.geometric_law(0.3))


def test_truncated_tv_reports_tail():
    d = E.EmpiricalDist.from_values([1, 2, 60, 70])
    r = E.truncated_tv(d, E.geometric_law(0.5), cap=50)
    assert r.empirical_tail == 0.5
    assert 0 < r.reference_tail < 1e-12
    assert r.cap == 50
    # a mapping law and an array law give the same answer
    law = {k: 0.5 ** k for k in range(1, 60)}
    arr = np.array([0.0] + [0.5 ** k for k in range(1, 60)])
    assert abs(E.truncated_tv(d, law, 50).tv - E.truncated_tv(d, arr, 50).tv) <= 1e-15


def test_check_kinds():
    assert E.Check("x", 1.0, 1.01, 0.02, "abs").passed
    assert not E.Check("x", 1.0, 1.05, 0.02, "abs").passed
    assert E.Check("x", 1.0, 1.0, 0.0, "le").passed
    assert E.Check("x", 0.98, 1.0, 0.02, "ge").passed
    assert not E.Check("x", 0.0, 0.0, 0.0, "lt").passed
    assert not E.Check("x", float("nan"), 0.0, 1.0, "abs").passed
    with pytest.raises(ValueError):
        E.Check("x", 0, 0, 0, "approx").passed


def _square(rng, k):
    return float(rng.random()) * k


def test_replicates_independent_of_jobs():
    serial = E.run_replicates(_square, 3, (9,), 17, jobs=1, args=(2,))
    parallel = E.run_replicates(_square, 3, (9,), 17, jobs=3, args=(2,))
    assert serial == parallel
    assert serial[4] == derive(3, 9, 4).random() * 2


def test_speed_curve_rows_and_summary():
    res = E.exp_speed_curve(300, [0.5, 1.5], 12, seed=11)
    assert len(res.rows) == 24
    assert {"n", "seed", "rep", "c", "distance"} <= set(res.rows[0])
    d = [r["d_over_n"] for r in res.rows if r["c"] == 1.5]
    assert res.summary["mean_d_over_n[c=1.5]"] == pytest.approx(np.mean(d))
    again = E.exp_speed_curve(300, [0.5, 1.5], 12, seed=11, jobs=2)
    assert again.to_csv() == res.to_csv()
    assert again.to_json() == res.to_json()


def test_csv_and_json_mirror():
    res = E.exp_thm8(200, 0.5, 6, seed=1)
    doc = json.loads(res.to_json())
    assert doc["name"] == "thm8" and doc["params"]["seed"] == 1
    assert len(doc["rows"]) == 6 and doc["passed"] == res.passed
    text = res.to_csv()
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body[:7]))))
    assert list(rows[0]) == list(doc["rows"][0])
    assert [int(r["d_between"]) for r in rows] == [r["d_between"] for r in doc["rows"]]
    assert "# checks" in text and "# summary" in text


def test_thm1_small_run():
    res = E.exp_thm1(200, 0.15, 8, seed=2)
    assert res.params["shadow"] is True
    for r in res.rows:
        assert r["product"] >= 0 and r["geodesic_to_p"] >= 0
        assert r["product"] == (r["d_x"] + r["d_y"] - r["d_xy"]) / 2


def test_fig2_columns():
    res = E.exp_fig2([0.1, 0.3], alt_grid=(100, 200, 400, 800))
    assert set(res.rows[0]) >= {"a", "xi", "c1", "c2", "gamma"}
    assert res.passed


def test_analytic_checks_pass():
    assert E.exp_analytic().passed


def test_invalid_inputs():
    with pytest.raises(ValueError):
        E.exp_singularity(100, 0.6, 2, seed=0)
