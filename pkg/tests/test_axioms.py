"""Sampled axiom checks: witnesses, verdicts, coefficient estimation, labels."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmtk.axioms import (
    MAX_WITNESSES,
    build_report,
    check_metric_type,
    check_pm1,
    check_pm2,
    check_pm3,
    check_pm4,
    check_positivity,
    classify,
    estimate_min_K,
)
from pmtk.errors import InputError
from pmtk.spaces import (
    Box,
    Sampler,
    SpaceClass,
    SpaceDescriptor,
    build_oracle,
    eval_distance,
    oracle_from_callable,
)


def make_space(oracle_spec, K=1.0, n=1, claim=SpaceClass.KPMS, lo=0.0, hi=1.0):
    oracle = oracle_spec if not isinstance(oracle_spec, (dict, str)) else build_oracle(oracle_spec)
    return SpaceDescriptor(
        oracle=oracle,
        coeff_K=K,
        polygon_order_n=n,
        domain=Box.closed(lo, hi),
        class_claim=claim,
    )


def small_sampler(space, seed=5, count=300):
    return Sampler(seed=seed, region=space.domain, grid_density=5, random_count=count)


SQ_DIFF = {"op": "power", "base": {"op": "absdiff"}, "q": 2.0}
SQ_SHIFTED = {"op": "affine", "arg": SQ_DIFF, "offset": 2.0}


# ---------------------------------------------------------------------------
# pm1


def test_pm1_passes_on_deterministic_continuous_oracle():
    sp = make_space(SQ_SHIFTED, K=2.0)
    check = check_pm1(sp, small_sampler(sp, count=2000))
    assert check.passed
    assert check.samples_checked > 2000


def test_pm1_forward_catches_nondeterministic_oracle():
    counter = itertools.count()
    sp = make_space(oracle_from_callable(lambda a, b: float(next(counter))))
    check = check_pm1(sp, small_sampler(sp))
    assert not check.passed
    assert any(w.points[0] == w.points[1] for w in check.witnesses)


def test_pm1_converse_catches_constant_plateau():
    sp = make_space({"op": "const", "value": 1.0})
    check = check_pm1(sp, small_sampler(sp, count=200))
    assert not check.passed
    w = check.witnesses[0]
    assert w.points[0] != w.points[1]
    assert w.lhs == w.rhs == 1.0


def test_pm1_witness_cap_keeps_exact_sample_count():
    sp = make_space({"op": "const", "value": 1.0})
    check = check_pm1(sp, small_sampler(sp, count=400))
    assert len(check.witnesses) == MAX_WITNESSES
    assert check.samples_checked > 400


# ---------------------------------------------------------------------------
# pm2 / pm3


def test_pm2_flags_large_self_distance():
    # p(x,y) = 1 - |x-y| has self distance 1 above every cross distance
    spec = {"op": "affine", "arg": {"op": "absdiff"}, "scale": -1.0, "offset": 1.0}
    sp = make_space(spec)
    check = check_pm2(sp, small_sampler(sp))
    assert not check.passed
    w = check.witnesses[0]
    assert w.lhs > w.rhs
    # witnesses re-evaluate to the stored violation
    assert eval_distance(sp, w.points[0], w.points[0]) == w.lhs
    assert eval_distance(sp, w.points[0], w.points[1]) == w.rhs


def test_pm2_passes_for_max_oracle():
    sp = make_space({"op": "max"}, claim=SpaceClass.PARTIAL_B_METRIC)
    assert check_pm2(sp, small_sampler(sp)).passed


def test_pm3_flags_asymmetric_oracle():
    sp = make_space(oracle_from_callable(lambda a, b: a))
    check = check_pm3(sp, small_sampler(sp))
    assert not check.passed
    w = check.witnesses[0]
    assert w.lhs == w.points[0].coords[0]
    assert w.rhs == w.points[1].coords[0]


# ---------------------------------------------------------------------------
# pm4 and chain handling


def test_pm4_passes_at_declared_coefficient():
    sp = make_space(SQ_DIFF, K=2.0)
    assert check_pm4(sp, small_sampler(sp)).passed


def test_pm4_fails_below_true_coefficient_with_live_witness():
    sp = make_space(SQ_DIFF, K=2.0)
    check = check_pm4(sp, small_sampler(sp), K=1.0)
    assert not check.passed
    x, z, y = check.witnesses[0].points
    lhs = eval_distance(sp, x, y) + eval_distance(sp, z, z)
    rhs = eval_distance(sp, x, z) + eval_distance(sp, z, y)
    assert lhs == check.witnesses[0].lhs
    assert lhs > rhs + 1e-9


def test_pm4_chain_modes():
    sp = make_space({"op": "absdiff"}, n=3)
    s = small_sampler(sp, count=60)
    exact = check_pm4(sp, s, chain_mode="exact")
    upto = check_pm4(sp, s, chain_mode="upto")
    assert exact.samples_checked == 60
    assert upto.samples_checked == 180
    with pytest.raises(InputError):
        check_pm4(sp, s, chain_mode="sideways")
    with pytest.raises(InputError):
        check_pm4(sp, s, chain_len=0)


# ---------------------------------------------------------------------------
# unweighted axioms


def test_metric_type_checks_split_by_axiom():
    sp = make_space({"op": "max"}, claim=SpaceClass.PARTIAL_B_METRIC)
    d = check_metric_type(sp, small_sampler(sp))
    assert not d["D1"].passed  # self distance is the coordinate itself
    assert d["D2"].passed
    assert d["D1"].witnesses[0].rhs == 0.0


def test_metric_type_passes_for_plain_distance():
    sp = make_space({"op": "absdiff"}, claim=SpaceClass.METRIC)
    d = check_metric_type(sp, small_sampler(sp))
    assert all(c.passed for c in d.values())
    assert check_positivity(sp, small_sampler(sp)).passed


def test_positivity_flags_degenerate_distance():
    sp = make_space({"op": "dp", "source": {"op": "const", "value": 0.0}})
    check = check_positivity(sp, small_sampler(sp))
    assert not check.passed


# ---------------------------------------------------------------------------
# coefficient estimation


def test_min_K_estimate_approaches_two_for_squared_difference():
    sp = make_space(SQ_DIFF, K=2.0)
    est = estimate_min_K(sp, small_sampler(sp, count=2000))
    assert 1.9 <= est <= 2.0 + 1e-9


def test_min_K_estimate_is_one_for_max_oracle():
    sp = make_space({"op": "max"}, claim=SpaceClass.PARTIAL_B_METRIC)
    assert estimate_min_K(sp, small_sampler(sp)) == 1.0


def test_min_K_estimate_detects_incompatible_chain():
    # distance 1 only across the gap, 0 otherwise: the bracket vanishes
    # on wide chains while the left side stays positive
    def banded(a, b):
        return 1.0 if abs(a - b) >= 0.9 else 0.0

    sp = make_space(oracle_from_callable(banded))
    est = estimate_min_K(sp, small_sampler(sp))
    assert est == float("inf")


# ---------------------------------------------------------------------------
# classification and aggregate report


def test_classify_ladder_for_plain_metric():
    sp = make_space({"op": "absdiff"}, claim=SpaceClass.METRIC)
    labels = classify(sp, small_sampler(sp))
    kinds = [lb.kind for lb in labels]
    assert kinds == [
        SpaceClass.KPMS,
        SpaceClass.PARTIAL_B_METRIC,
        SpaceClass.PARTIAL_RECTANGULAR,
        SpaceClass.METRIC_TYPE,
        SpaceClass.METRIC,
    ]


def test_classify_stops_at_weighted_labels_for_shifted_square():
    sp = make_space(SQ_SHIFTED, K=2.0)
    labels = classify(sp, small_sampler(sp))
    kinds = {lb.kind for lb in labels}
    assert kinds == {SpaceClass.KPMS, SpaceClass.PARTIAL_B_METRIC}


def test_build_report_supports_claim_despite_unweighted_failures():
    sp = make_space(SQ_SHIFTED, K=2.0)
    report = build_report(sp, small_sampler(sp), with_labels=True)
    assert set(report.checks) == {"pm1", "pm2", "pm3", "pm4", "D1", "D2", "D3"}
    assert report.claim_supported
    assert not report.all_passed  # D1 fails, self distance is 2
    assert report.min_K_estimate is not None
    assert 1.0 <= report.min_K_estimate <= 2.0
    doc = report.to_json_dict()
    assert doc["claim"] == "KPMS"
    assert doc["claim_supported"] is True
    assert doc["checks"]["D1"]["verdict"] == "fail"
    assert doc["checks"]["D1"]["witnesses"]


def test_build_report_for_metric_claim_includes_positivity():
    sp = make_space({"op": "absdiff"}, claim=SpaceClass.METRIC)
    report = build_report(sp, small_sampler(sp))
    assert "positivity" in report.checks
    assert report.claim_supported
    assert report.all_passed


def test_build_report_skips_min_K_when_core_fails():
    sp = make_space(oracle_from_callable(lambda a, b: a))
    report = build_report(sp, small_sampler(sp))
    assert not report.claim_supported
    assert report.min_K_estimate is None


# ---------------------------------------------------------------------------
# structural properties


@settings(max_examples=25, deadline=None)
@given(
    k_low=st.floats(min_value=1.0, max_value=3.0),
    bump=st.floats(min_value=0.0, max_value=2.0),
    seed=st.integers(min_value=0, max_value=2**32),
)
def test_pm4_verdict_is_monotone_in_K(k_low, bump, seed):
    sp = make_space(SQ_DIFF, K=4.0)
    s = Sampler(seed=seed, region=sp.domain, grid_density=4, random_count=40)
    low = check_pm4(sp, s, K=k_low)
    high = check_pm4(sp, s, K=k_low + bump)
    if low.passed:
        assert high.passed


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32))
def test_min_K_estimate_makes_pm4_pass(seed):
    sp = make_space(SQ_DIFF, K=4.0)
    s = Sampler(seed=seed, region=sp.domain, grid_density=4, random_count=60)
    est = estimate_min_K(sp, s)
    assert check_pm4(sp, s, K=est).passed
