import json

import numpy as np
import pytest

from kausal.bits import BitString, concat, sample_incompressible
from kausal.causal import (
    EQUIVALENT,
    PRECEDES,
    SPACELIKE,
    SUCCEEDS,
    build_poset,
    causal_distance,
    check_triviality,
    classify_determinism,
    common_cause,
    common_effect,
    construct_set,
    detect_extremes,
)
from kausal.errors import OrderInconsistent, TooShort


@pytest.fixture(scope="module")
def diamond():
    return build_poset(construct_set("diamond", 20_000, 4, 5))


def test_prefix_precedes_whole():
    r = sample_incompressible(40_000, 1)
    p = build_poset({"x": r[:20_000], "y": r})
    assert p.rel("x", "y") == PRECEDES
    assert p.rel("y", "x") == SUCCEEDS
    assert p.leq("x", "y") and not p.leq("y", "x")


def test_independent_strings_are_spacelike():
    p = build_poset(construct_set("spacelike", 20_000, 3, 2))
    assert all(p.rel(a, b) == SPACELIKE for a in p.names for b in p.names if a != b)
    ext = detect_extremes(p)
    assert ext.big_bang is None and set(ext.causeless) == set(p.names)


def test_complement_is_equivalent():
    r = sample_incompressible(20_000, 3)
    p = build_poset({"r": r, "not_r": BitString(1 - r.array)})
    assert p.rel("r", "not_r") == EQUIVALENT
    assert p.equivalence_classes() == [["not_r", "r"]]


def test_diamond_bounds(diamond):
    assert diamond.relation[1][2] == SPACELIKE
    assert common_effect(diamond, ["s1", "s2"]) == "s3"
    assert common_cause(diamond, ["s1", "s2"]) == "s0"
    assert common_effect(diamond, ["s0", "s1"]) == "s1"
    ext = detect_extremes(diamond)
    assert (ext.big_bang, ext.big_crunch) == ("s0", "s3")


def test_diamond_is_probabilistic(diamond):
    # each later element still carries fresh randomness, so not computable from its causes
    det = classify_determinism(diamond)
    assert not det.deterministic
    assert check_triviality(diamond).passed is None


def test_brute_force_transitivity_count(diamond):
    k = len(diamond.names)
    expected = [(diamond.names[i], diamond.names[j], diamond.names[m])
                for i in range(k) for j in range(k) for m in range(k)
                if len({i, j, m}) == 3 and diamond.le[i, j] == 1 and diamond.le[j, m] == 1 and diamond.le[i, m] == 0]
    assert diamond.violations == expected
    assert diamond.triples_checked == k * (k - 1) * (k - 2)


def test_order_inconsistent_raises():
    p = build_poset(construct_set("chain", 20_000, 3, 3))
    p.le[0, 2] = 0
    p.violations.append(("s0", "s1", "s2"))
    with pytest.raises(OrderInconsistent):
        common_effect(p, ["s0"])


@pytest.mark.parametrize("seed", range(5))
def test_equivalent_sets_are_trivial(seed):
    p = build_poset(construct_set("equivalent", 16_384, 4, seed))
    v = check_triviality(p)
    assert v.passed is True and v.details["counterexamples"] == []


def test_lossy_descendant_is_skipped_not_failed():
    # the truncated copy becomes the big bang, and the full string is not
    # computable from it, so the hypotheses of the check do not hold
    base = sample_incompressible(16_384, 8)
    C = {"a": base, "b": base.rotate(100), "c": concat(base[:8192], BitString.zeros(8192))}
    p = build_poset(C)
    v = check_triviality(p)
    assert v.passed is None and v.details["skipped"] == "structure is probabilistic"
    assert detect_extremes(p).big_bang == "c"


def test_triviality_reports_counterexamples():
    # an estimator disagreement is the only way to reach the failing branch
    p = build_poset(construct_set("equivalent", 16_384, 3, 1))
    p.relation[0][1], p.relation[1][0] = PRECEDES, SUCCEEDS
    p.le[1, 0] = 0
    p.margins[1, 0] = -0.5
    v = check_triviality(p)
    assert v.passed is False
    assert [c[:2] for c in v.details["counterexamples"]] == [("s0", "s1")]


def test_too_short():
    with pytest.raises(TooShort):
        build_poset({"a": BitString("01" * 100), "b": BitString("10" * 100)})


def test_serialization(diamond, tmp_path):
    d = json.loads(diamond.to_json(tmp_path / "p.json"))
    assert d["relation"] == diamond.relation
    dot = diamond.to_dot(tmp_path / "p.dot")
    assert '"s0" -> "s1";' in dot and dot.startswith("digraph")


def test_causal_distance():
    r = sample_incompressible(20_000, 9)
    extra = sample_incompressible(10_000, 10)
    d = causal_distance(r, concat(r, extra))
    assert abs(d.value_bits - 10_000) < 300
    assert causal_distance(concat(r, extra), r).value_bits < 200


def test_prefix_option():
    r = sample_incompressible(20_000, 11)
    p = build_poset({"x": r, "y": r.rotate(7)}, prefix=8192)
    assert np.all(p.values_bits[~np.eye(2, dtype=bool)] < 200)
