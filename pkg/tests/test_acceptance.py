"""Acceptance criteria 1-11.

Each criterion prints one line ``criterion N: PASS|FAIL <details> (<seconds>)``.
Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
Criterion 11 includes the full k=3 census and is the long-running one.
"""

import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from kausal.bits import BitString, concat, sample_incompressible
from kausal.causal import build_poset, check_triviality, construct_set
from kausal.complexity import estimate_K, estimate_K_cond
from kausal.nonlocality import (
    bundled_strategies,
    chained_chi_given_b,
    check_relation,
    gen_chained,
    gen_pr,
    magic_square_value,
    pr_parallel_value,
    test_no_signaling as no_signaling,
)
from kausal.process import (
    census,
    check_logical_consistency,
    classify_scenario,
    derive_causal_relations,
    fixed_points,
    one_way_channel,
    run_scenario,
    three_party_cyclic,
    two_way_channel,
)
from kausal.rng import as_seed
from kausal.thermo import (
    ReversibleMachine,
    bennett_extract,
    copy_generator,
    exhaustive_reversibility,
    fuel_bounds,
    random_program,
    second_law_audit,
)

ROOT = Path(__file__).resolve().parents[1]


def criterion_1():
    v = check_logical_consistency(two_way_channel())
    fps = fixed_points(two_way_channel(), ("id", "neg"))
    ok = (not v.consistent) and ("id", "neg") in v.failing_combos and fps == set()
    return ok, f"verdict={'consistent' if v.consistent else 'inconsistent'} failing={v.failing_combos} fp={fps}", 1


def criterion_2():
    g = three_party_cyclic()
    v = check_logical_consistency(g)
    unique = len(v.per_combo) == 64 and all(len(fp) == 1 for fp in v.per_combo.values())
    sc = run_scenario(g, 2, 100_000)
    m = derive_causal_relations(sc.parties)
    groups = all(m.group_precedes(s, t) for s, t in ((("B", "C"), "A"), (("A", "C"), "B"), (("A", "B"), "C")))
    cls = classify_scenario(m)
    return unique and groups and cls == "non_causal", f"unique_fp_all_64={unique} groups={groups} class={cls}", 30


def criterion_3():
    a_b = b_a = 0
    for i in range(100):
        sc = run_scenario(one_way_channel(), as_seed(3).derive(f"run/{i}"), 100_000)
        m = derive_causal_relations(sc.parties, groups=False)
        a_b += m.precedes("A", "B")
        b_a += m.precedes("B", "A")
    return a_b >= 99 and b_a <= 1, f"A<=B in {a_b}/100, B<=A in {b_a}/100", 300


def criterion_4():
    q = gen_pr(100_000, 1)
    kx = estimate_K(q.x).ratio()
    kxa = estimate_K_cond(q.x, q.a).ratio()
    ns = no_signaling(q)
    ok = kx >= 0.5 and kxa >= 0.3 and bool(ns.passed)
    return ok, f"K(x)/n={kx:.4f} K(x|a)/n={kxa:.4f} no_signaling_margin={ns.margin:.4f}", 60


def criterion_5():
    worst, parts = 0.0, []
    for s in bundled_strategies():
        q = gen_pr(100_000, 5, s)
        cond = (q.a, q.hidden.lam) if q.hidden else (q.a,)
        r = estimate_K_cond(q.x, cond).ratio()
        worst = max(worst, r)
        parts.append(f"{s.name}={r:.4f}")
    return worst <= 0.05, " ".join(parts), 60


def criterion_6():
    golden = [json.loads(x) for x in (ROOT / "goldens/parallel-value-r2/report.jsonl").read_text().splitlines()]
    want = [r["wins"] for r in golden if r.get("name") == "parallel_value"][0]
    v1, v2, ms = pr_parallel_value(1), pr_parallel_value(2), magic_square_value()
    ok = v1 == 3 and v2 == want and v2 < 16 and ms == Fraction(8, 9)
    return ok, f"r1={v1} r2={v2} (golden {want}) magic={ms}", 120


def criterion_7():
    m, n = 8, 1_000_000
    q = gen_chained(n, m, 7)
    bf = float(np.mean(q.b.array == 1))
    kc = chained_chi_given_b(q).value_bits
    viol = check_relation(q).fraction()
    ok = abs(bf - 0.125) <= 0.01 and n / 8 * 0.85 <= kc <= n / 8 * 1.15 and abs(viol - 1 / 64) <= 0.2 / 64
    return ok, f"b=1 fraction={bf:.4f} K(chi|b)={kc} (target {n // 8}) violations={viol:.5f} (1/m^2={1 / 64:.5f})", 120


def criterion_8():
    restored = sum(exhaustive_reversibility(random_program(16, 200, as_seed(8).derive(f"p/{i}")), 16)["restored"]
                   for i in range(100))
    wide_ok = 0
    for i in range(4):
        tape = sample_incompressible(4096, as_seed(8).derive(f"tape/{i}"))
        mach = ReversibleMachine(tape, random_program(4096, 2000, as_seed(8).derive(f"wide/{i}")))
        mach.run()
        wide_ok += mach.invert() == tape
    trace = ReversibleMachine(BitString.zeros(4096), random_program(4096, 1000, as_seed(8).derive("audit"))).run(
        snapshot_every=1)
    audit = second_law_audit(trace, slack=128)
    ok = restored == 100 and wide_ok == 4 and audit.violations == 0
    return ok, (f"exhaustive {restored}/100 programs, width-4096 {wide_ok}/4 tapes, "
                f"audit violations={audit.violations} over {audit.pairs} pairs"), 300


def criterion_9():
    n = 100_000
    zeros = fuel_bounds(BitString.zeros(n)).lower_bound_bits
    r = sample_incompressible(n, 9)
    rnd = fuel_bounds(r).upper_bound_bits
    same = fuel_bounds(r, r).upper_bound_bits
    X = sample_incompressible(n, 10)
    res = bennett_extract(X, X, copy_generator(n, n))
    restored = res.final_tape == concat(BitString.zeros(n), X, BitString.zeros(n))
    ok = zeros >= 0.98 * n and rnd <= 0.05 * n and same >= 0.9 * n and res.extracted_zeros == n and restored
    return ok, (f"zeros lower={zeros} random upper={rnd} X=S upper={same} "
                f"bennett zeros={res.extracted_zeros} restored={restored}"), 60


def criterion_10():
    ok_sets, counter = 0, 0
    for i in range(20):
        C = construct_set("equivalent", 16_384, 3 + i % 4, as_seed(10).derive(f"set/{i}"))
        v = check_triviality(build_poset(C))
        ok_sets += v.passed is True
        counter += len(v.details.get("counterexamples", []))
    return ok_sets == 20 and counter == 0, f"{ok_sets}/20 sets trivial, {counter} counterexamples", 120


def criterion_11():
    # the k=1 census compiles (or loads) the same kernels; that one-time cost is reported, not timed
    t0 = time.perf_counter()
    census(1)
    jit = time.perf_counter() - t0
    t0 = time.perf_counter()
    r2 = census(2)
    t2 = time.perf_counter() - t0
    tw, ow = r2.classify(two_way_channel()), r2.classify(one_way_channel())
    r3 = census(3, keep=False)
    nc = r3.counts["consistent_non_causal"]
    ok = sum(r2.counts.values()) == 256 and tw == "inconsistent" and ow == "consistent_causal" and nc >= 1 and t2 < 1
    return ok, (f"k=2 {r2.counts} (two_way={tw}, one_way={ow}, {t2:.3f}s after {jit:.2f}s kernel compile); "
                f"k=3 [long-running] {r3.counts}"), 1800


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11]


def evaluate(number: int):
    t0 = time.perf_counter()
    ok, detail, limit = CRITERIA[number - 1]()
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < limit
    return ok, f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail} ({elapsed:.1f}s, limit {limit}s)"


SLOW = {3, 8, 11}


@pytest.mark.parametrize("number", [pytest.param(i, marks=pytest.mark.slow) if i in SLOW else i for i in range(1, 12)])
def test_criterion(number, capsys):
    ok, line = evaluate(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for i in range(1, 12):
        ok, line = evaluate(i)
        failed += not ok
        print(line, flush=True)
    sys.exit(1 if failed else 0)
