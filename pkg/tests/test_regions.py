"""Rate-region construction, comparison, search, and serialization."""

import json
import math

import jsonschema
import numpy as np
import pytest

import obliv_relay as ob
from obliv_relay.channels import builtin_channel
from obliv_relay.dist import build_joint, cond_mutual_info, entropy
from obliv_relay.errors import ValidationError
from obliv_relay.regions import (
    Bound,
    ConstraintClass,
    RateRegion,
    SearchConfig,
    _entropy_matched_dist,
    cf_feasibility_gap,
    cf_region_pmarc,
    frontier_search,
    gcf_region_pifrc,
    gcf_region_pmarc,
    iter_policy_grid,
    max_weighted_rate,
    nnc_region_pmarc,
    region_compare,
    region_for,
    region_to_csv,
    region_to_dict,
    region_to_json,
)
from obliv_relay.schemas import REGION_SCHEMA

from conftest import random_pmarc


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def test_adder_gcf_hand_values():
    ch = builtin_channel("binary_adder_pmarc")
    pol = ob.uniform_policy(ch)
    region = gcf_region_pmarc(ch, pol)
    assert region.scheme == "gcf"
    assert not region.empty
    got = {
        (c.label, b.name): b.value for c in region.classes for b in c.bounds
    }
    # identity compression, C = 1: the relay observation is a free copy of Y
    expect = {
        ("R1", "joint_decoding"): 1.0,
        ("R1", "link_limited"): 2.0,
        ("R2", "joint_decoding"): 1.0,
        ("R2", "link_limited"): 2.0,
        ("R1+R2", "joint_decoding"): 1.5,
        ("R1+R2", "link_limited"): 2.5,
    }
    assert got.keys() == expect.keys()
    for key, val in expect.items():
        assert got[key] == pytest.approx(val, abs=1e-12), key
    eff = region.effective_bounds()
    assert eff["R1"] == pytest.approx(1.0, abs=1e-12)
    assert eff["R2"] == pytest.approx(1.0, abs=1e-12)
    assert eff["R1+R2"] == pytest.approx(1.5, abs=1e-12)


def test_negative_link_limited_bound_is_clamped():
    ch = builtin_channel("bsc_pmarc", {"C": 0.0, "noise": 0.3, "relay_noise": 0.3})
    pol = ob.uniform_policy(ch)
    region = gcf_region_pmarc(ch, pol)
    per_user = {b.name: b for b in region.class_map()["R1"].bounds}
    raw = per_user["link_limited"].raw
    assert raw == pytest.approx((1 - h2(0.3)) - h2(0.3), abs=1e-12)
    assert raw < 0
    assert per_user["link_limited"].clamped
    assert per_user["link_limited"].value == 0.0
    assert not per_user["joint_decoding"].clamped


def test_cf_feasibility_gap_value_and_empty_region():
    ch = builtin_channel("bsc_pmarc", {"C": 0.2})
    pol = ob.uniform_policy(ch)
    # identity compression: the residual cost is H(Y_R | Y) for two
    # conditionally independent 0.1-noise views, i.e. h2(0.18)
    gap = cf_feasibility_gap(ch, pol)
    assert gap == pytest.approx(0.2 - h2(0.18), abs=1e-12)
    region = cf_region_pmarc(ch, pol)
    assert region.empty
    assert region.classes == ()
    assert "infeasible" in region.claim
    roomy = builtin_channel("bsc_pmarc", {"C": 1.0})
    assert not cf_region_pmarc(roomy, ob.uniform_policy(roomy)).empty


def test_cf_matches_gcf_whenever_cf_is_feasible():
    rng = np.random.default_rng(105)
    feasible_seen = 0
    for _ in range(40):
        ch = random_pmarc(rng)
        pol = ob.random_policy(ch, rng, q_size=int(rng.integers(1, 3)))
        if cf_feasibility_gap(ch, pol) < 0:
            continue
        feasible_seen += 1
        result = region_compare(cf_region_pmarc(ch, pol), gcf_region_pmarc(ch, pol))
        assert result.verdict == "equal", result
    assert feasible_seen >= 10


def _toy_region(vals, scheme="gcf"):
    classes = []
    for label, members, v in (
        ("R1", (1,), vals[0]),
        ("R2", (2,), vals[1]),
        ("R1+R2", (1, 2), vals[2]),
    ):
        classes.append(
            ConstraintClass(
                label=label,
                members=members,
                bounds=(Bound.make("joint_decoding", v),),
            )
        )
    return RateRegion(num_sources=2, classes=tuple(classes), scheme=scheme,
                      claim="achievable (test)")


def test_region_compare_verdicts():
    base = _toy_region([1.0, 1.0, 1.5])
    assert region_compare(base, _toy_region([1.0, 1.0, 1.5])).verdict == "equal"
    r = region_compare(_toy_region([0.5, 1.0, 1.5]), base)
    assert r.verdict == "a_subset_b"
    assert r.witness == "R1"
    assert r.max_gap_bits == pytest.approx(0.5)
    assert region_compare(base, _toy_region([1.0, 0.25, 1.5])).verdict == "b_subset_a"
    r = region_compare(_toy_region([0.5, 2.0, 1.5]), base)
    assert r.verdict == "incomparable"
    # gaps inside tolerance count as equality
    assert region_compare(base, _toy_region([1.0 + 1e-12, 1.0, 1.5])).verdict == "equal"


def test_region_compare_rejects_mismatched_shapes():
    base = _toy_region([1.0, 1.0, 1.5])
    lopsided = RateRegion(
        num_sources=2,
        classes=(base.classes[0],),
        scheme="gcf",
        claim="achievable (test)",
    )
    with pytest.raises(ValidationError, match="constraint classes"):
        region_compare(base, lopsided)
    empty = RateRegion(num_sources=2, classes=(), scheme="cf",
                       claim="empty (CF infeasible: compression index not "
                             "sequentially decodable)", empty=True)
    assert region_compare(empty, base).verdict == "a_subset_b"
    assert region_compare(base, empty).verdict == "b_subset_a"
    assert region_compare(empty, empty).verdict == "equal"


def test_max_weighted_rate_corners():
    region = _toy_region([1.0, 1.0, 1.5])
    assert max_weighted_rate(region, (1.0, 1.0)) == pytest.approx(1.5, abs=1e-9)
    assert max_weighted_rate(region, (1.0, 0.0)) == pytest.approx(1.0, abs=1e-9)
    # steep weights pick the corner (1, 0.5)
    assert max_weighted_rate(region, (2.0, 1.0)) == pytest.approx(2.5, abs=1e-9)
    empty = RateRegion(num_sources=2, classes=(), scheme="cf", claim="empty",
                       empty=True)
    assert max_weighted_rate(empty, (1.0, 1.0)) == -math.inf


def test_entropy_matched_dist():
    for target in (0.0, 0.4, 1.0, math.log2(3), 2.5):
        p = _entropy_matched_dist(target)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        ent = float(-(p[p > 0] * np.log2(p[p > 0])).sum())
        assert ent == pytest.approx(target, abs=1e-9)


def test_nnc_agrees_with_gcf_on_seeded_draws():
    rng = np.random.default_rng(77)
    for _ in range(10):
        ch = random_pmarc(rng)
        pol = ob.random_policy(ch, rng)
        gcf = gcf_region_pmarc(ch, pol)
        nnc = nnc_region_pmarc(ch, pol)
        assert nnc.scheme == "nnc"
        for cls_g, cls_n in zip(gcf.classes, nnc.classes):
            assert cls_g.label == cls_n.label
            assert cls_n.effective == pytest.approx(cls_g.effective, abs=1e-9)


def test_pifrc_region_structure_and_claim():
    ch = builtin_channel("xor_pifrc")
    pol = ob.uniform_policy(ch)
    region = gcf_region_pifrc(ch, pol)
    by_label = region.class_map()
    assert set(by_label) == {"R1", "R2", "R1+R2"}
    assert [b.name for b in by_label["R1"].bounds] == [
        "joint_decoding_d1", "link_limited_d1"]
    assert [b.name for b in by_label["R2"].bounds] == [
        "joint_decoding_d2", "link_limited_d2"]
    assert [b.name for b in by_label["R1+R2"].bounds] == [
        "joint_decoding_d1", "link_limited_d1",
        "joint_decoding_d2", "link_limited_d2"]
    assert region.claim == "achievable (GCF)"
    report = ob.strong_interference_dmc(ch, SearchConfig(resolution=3))
    capacity = gcf_region_pifrc(ch, pol, condition_report=report)
    assert report.holds
    assert capacity.claim == "capacity (GCF, strong interference)"


def test_region_for_dispatch_and_errors():
    ch = builtin_channel("binary_adder_pmarc")
    pol = ob.uniform_policy(ch)
    assert region_for(ch, pol, "gcf").scheme == "gcf"
    assert region_for(ch, pol, "cf").scheme == "cf"
    assert region_for(ch, pol, "nnc").scheme == "nnc"
    with pytest.raises(ValidationError, match="unknown scheme"):
        region_for(ch, pol, "afd")
    pifrc = builtin_channel("xor_pifrc")
    with pytest.raises(ValidationError, match="pifrc"):
        cf_region_pmarc(pifrc, ob.uniform_policy(pifrc))


def test_iter_policy_grid_count():
    ch = builtin_channel("binary_adder_pmarc")
    policies = list(iter_policy_grid(ch, 1, (2,), 2))
    # blocks: q (dim 1), two inputs (dim 2), three compression rows (dim 2)
    assert len(policies) == 3 ** 5
    for pol in policies[:5]:
        pol.check_against(ch)


def test_frontier_search_deterministic_and_thread_invariant():
    ch = builtin_channel("binary_adder_pmarc")
    cfg = SearchConfig(resolution=2, samples=5, seed=11, weights=(1.0, 1.0),
                       compression_sizes=(2,))
    a = frontier_search(ch, "gcf", cfg)
    b = frontier_search(ch, "gcf", cfg)
    c = frontier_search(ch, "gcf", cfg, threads=2)
    assert a.evaluated == 3 ** 5 + 5
    assert a.value == b.value == c.value
    np.testing.assert_array_equal(a.policy.q_dist, b.policy.q_dist)
    for da, db, dc in zip(a.policy.input_dists, b.policy.input_dists,
                          c.policy.input_dists):
        np.testing.assert_array_equal(da, db)
        np.testing.assert_array_equal(da, dc)
    with pytest.raises(ValidationError, match="weight"):
        frontier_search(ch, "gcf", SearchConfig(resolution=2))


def test_region_serialization_roundtrip_schema_and_csv():
    ch = builtin_channel("binary_adder_pmarc")
    pol = ob.uniform_policy(ch)
    region = gcf_region_pmarc(ch, pol)
    doc = region_to_dict(region)
    jsonschema.validate(doc, REGION_SCHEMA)
    assert json.loads(region_to_json(region)) == doc
    empty = cf_region_pmarc(
        builtin_channel("bsc_pmarc", {"C": 0.1}),
        ob.uniform_policy(builtin_channel("bsc_pmarc", {"C": 0.1})),
    )
    jsonschema.validate(region_to_dict(empty), REGION_SCHEMA)

    lines = region_to_csv(region).strip().split("\n")
    assert lines[0] == "class,bound_name,value_bits"
    assert len(lines) == 1 + 3 * 3  # three classes x (two bounds + effective)
    table = {}
    for line in lines[1:]:
        label, name, value = line.split(",")
        table[(label, name)] = float(value)
    assert table[("R1+R2", "effective")] == pytest.approx(1.5, abs=1e-12)
    assert table[("R1", "joint_decoding")] == pytest.approx(1.0, abs=1e-12)


def test_saturated_capacity_reduces_link_bound_to_side_information():
    # once C is big the link bound always exceeds joint decoding, so the
    # effective region is what a destination with direct relay access gets
    ch = builtin_channel("bsc_pmarc", {"C": 3.0})
    pol = ob.uniform_policy(ch)
    region = gcf_region_pmarc(ch, pol)
    joint = build_joint(ch, pol)
    for cls in region.classes:
        names = {f"X{i}" for i in cls.members}
        others = {f"X{i}" for i in (1, 2)} - names
        ceiling = cond_mutual_info(
            joint, tuple(sorted(names)), ("Y1", "YR"),
            tuple(sorted(others)) + ("Q",),
        )
        assert cls.effective == pytest.approx(ceiling, abs=1e-12)
