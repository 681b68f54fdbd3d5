import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdcr.metrics import average_precision, interpolated_pr, mean_ap, pr_curve
from mdcr.retrieval import RankedResult


def brute_force_ap(rel):
    """The AP formula evaluated with exact rationals, one rank at a time."""
    num = Fraction(0)
    hits = 0
    for k, r in enumerate(rel, start=1):
        if r:
            hits += 1
            num += Fraction(hits, k)
    return 0.0 if hits == 0 else float(num / hits)


def result(rel, label=0, idx=0):
    rel = np.asarray(rel, dtype=np.int8)
    n = rel.size
    return RankedResult(idx, np.arange(n), np.arange(n, dtype=float), rel, label)


def test_ap_examples():
    assert average_precision([1, 1, 1]) == 1.0
    assert average_precision([1, 0, 1]) == pytest.approx(5 / 6, abs=1e-12)
    assert average_precision([0, 0, 0]) == 0.0
    with pytest.raises(ValueError):
        average_precision([])


def test_ap_top_k():
    assert average_precision([0, 1, 1], k=2) == 0.5
    assert average_precision([0, 0, 1], k=2) == 0.0


@given(st.lists(st.integers(0, 1), min_size=1, max_size=50))
def test_ap_properties(rel):
    ap = average_precision(rel)
    assert 0.0 <= ap <= 1.0
    assert ap == pytest.approx(brute_force_ap(rel), abs=1e-15)
    n_rel = sum(rel)
    perfect = all(r == 1 for r in rel[:n_rel])
    assert (ap == 1.0) == (n_rel > 0 and perfect)


def test_mean_ap_examples():
    rep = mean_ap([result([1]), result([0, 1], label=1, idx=1)])
    assert rep.mAP == 0.75
    assert rep.per_query_ap == [1.0, 0.5]
    assert rep.per_class_map == {0: 1.0, 1: 0.5}
    rep = mean_ap([result([1, 0, 1], idx=i) for i in range(4)])
    assert rep.mAP == pytest.approx(5 / 6, abs=1e-12)
    with pytest.raises(ValueError):
        mean_ap([])


def test_mean_ap_is_mean_of_per_query():
    rng = np.random.default_rng(0)
    res = [result(rng.integers(0, 2, 30), label=int(rng.integers(0, 3)), idx=i) for i in range(50)]
    rep = mean_ap(res)
    assert abs(rep.mAP - np.mean(rep.per_query_ap)) <= 1e-12
    for c, v in rep.per_class_map.items():
        members = [ap for r, ap in zip(res, rep.per_query_ap) if r.query_label == c]
        assert v == pytest.approx(np.mean(members), abs=1e-12)


def test_pr_examples():
    levels, prec = interpolated_pr([1, 1])
    assert np.all(prec == 1.0) and len(levels) == 11
    levels, prec = interpolated_pr([0, 1])
    assert levels[-1] == 1.0 and prec[-1] == 0.5
    _, prec = interpolated_pr([0, 0])
    assert np.all(prec == 0)
    with pytest.raises(ValueError):
        interpolated_pr([1], points=1)


def test_pr_hand_computed():
    # ranks: R N R N N R, 3 relevant; precision at hits 1, 2/3, 1/2
    levels, prec = interpolated_pr([1, 0, 1, 0, 0, 1], points=4)
    np.testing.assert_allclose(levels, [0.0, 1 / 3, 2 / 3, 1.0], atol=1e-12)
    np.testing.assert_allclose(prec, [1.0, 1.0, 2 / 3, 0.5])


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.integers(2, 21))
def test_pr_non_increasing(rel, points):
    _, prec = interpolated_pr(rel, points)
    assert np.all(np.diff(prec) <= 1e-15)
    assert np.all((prec >= 0) & (prec <= 1))


def test_pr_curve_averages_queries():
    curve = pr_curve([result([1, 1]), result([0, 1])], points=2)
    assert curve == [(0.0, 0.75), (1.0, 0.75)]


def test_report_serialization():
    rep = mean_ap([result([1, 0, 1], label=2)])
    d = json.loads(rep.to_json())
    assert d["mAP"] == rep.mAP
    assert d["perClassMAP"] == {"2": rep.mAP}
    rows = list(csv.reader(io.StringIO(rep.pr_csv())))
    assert rows[0] == ["recall", "precision"]
    assert len(rows) == 12
    assert float(rows[-1][0]) == 1.0
