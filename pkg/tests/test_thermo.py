import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kausal.bits import BitString, concat, sample_incompressible
from kausal.errors import GateIndexOutOfRange, GeneratorMismatch, MalformedFile, NoCoveringModel
from kausal.thermo import (
    CNOT,
    DEFAULT_REGISTRY,
    NOT,
    TOFFOLI,
    ReversibleMachine,
    Trace,
    bennett_extract,
    copy_generator,
    exhaustive_reversibility,
    fuel_bounds,
    landauer_ledger,
    log2_binom,
    mixing_demo,
    random_program,
    run_program,
    second_law_audit,
    structure_function,
    work_per_bit,
)


def py_run(bits, program):
    """Reference gate semantics on a Python list."""
    t = list(bits)
    for op, i, j, k in program:
        if op == 0:
            t[i] ^= 1
        elif op == 1:
            t[j] ^= t[i]
        else:
            t[k] ^= t[i] & t[j]
    return t


def test_gates_match_reference():
    prog = random_program(12, 300, 1)
    for seed in range(5):
        tape = sample_incompressible(12, seed)
        assert run_program(tape, prog).array.tolist() == py_run(tape.array.tolist(), prog.tolist())


def test_exhaustive_against_per_tape_loop():
    width = 6
    prog = random_program(width, 40, 2)
    res = exhaustive_reversibility(prog, width)
    images = set()
    for bits in itertools.product((0, 1), repeat=width):
        out = py_run(bits, prog.tolist())
        back = py_run(out, prog[::-1].tolist())
        assert back == list(bits)
        images.add(tuple(out))
    assert len(images) == 2 ** width
    assert res == {"restored": True, "bijective": True, "tapes": 64}


def test_exhaustive_width16_sample_of_programs():
    for i in range(10):
        res = exhaustive_reversibility(random_program(16, 200, i), 16)
        assert res["restored"] and res["bijective"]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(3, 64), st.integers(0, 200))
def test_invert_restores(seed, width, gates):
    tape = sample_incompressible(width, seed)
    m = ReversibleMachine(tape, random_program(width, gates, seed))
    m.run()
    assert m.invert() == tape


def test_step_and_history():
    m = ReversibleMachine(BitString("000"), [NOT(0), CNOT(0, 1), TOFFOLI(0, 1, 2)])
    m.step()
    assert str(m.tape) == "100" and m.history == [0]
    m.run()
    assert str(m.tape) == "111"
    with pytest.raises(IndexError):
        m.step()
    assert str(m.invert()) == "000"


def test_gate_index_checked():
    with pytest.raises(GateIndexOutOfRange):
        ReversibleMachine(BitString("00"), [CNOT(0, 2)])
    with pytest.raises(ValueError):
        ReversibleMachine(BitString("000"), [CNOT(1, 1)])


def test_trace_round_trip(tmp_path):
    m = ReversibleMachine(BitString.zeros(32), random_program(32, 50, 3))
    tr = m.run(snapshot_every=10)
    tr.write(tmp_path / "t.txt")
    back = Trace.read(tmp_path / "t.txt")
    assert np.array_equal(back.steps, tr.steps) and np.array_equal(back.tapes, tr.tapes)
    assert back.steps.tolist() == [0, 10, 20, 30, 40, 50]
    (tmp_path / "bad.txt").write_text("0 0101\n1 01x1\n")
    with pytest.raises(MalformedFile):
        Trace.read(tmp_path / "bad.txt")


def test_fuel_standard_cases(big_random):
    n = 100_000
    r = big_random[0]
    zeros = fuel_bounds(BitString.zeros(n))
    assert zeros.lower_bound_bits >= 0.98 * n
    rnd = fuel_bounds(r)
    assert rnd.upper_bound_bits <= 0.05 * n
    same = fuel_bounds(r, r)
    assert same.upper_bound_bits >= 0.9 * n
    d = same.to_dict()
    assert math.isclose(d["upper_bound_joules"], same.upper_bound_bits * work_per_bit(300.0))


def test_work_per_bit():
    assert math.isclose(work_per_bit(300.0), 1.380649e-23 * 300 * math.log(2))


def test_bennett_extracts_and_restores():
    X = sample_incompressible(5000, 4)
    S = X[:3000]
    res = bennett_extract(S, X, copy_generator(len(X), len(S)), scratch=8)
    assert res.extracted_zeros == 3000
    assert res.final_tape == concat(BitString.zeros(3000), X, BitString.zeros(3000 + 8))
    assert res.layout["X"] == [3000, 8000]


def test_bennett_generator_mismatch_restores_tape():
    X = sample_incompressible(2000, 5)
    S = sample_incompressible(1000, 6)
    with pytest.raises(GeneratorMismatch) as exc:
        bennett_extract(S, X, copy_generator(len(X), len(S)))
    assert exc.value.tape == concat(S, X, BitString.zeros(1000))


def _all_strings(n):
    for bits in itertools.product((0, 1), repeat=n):
        yield BitString(bits)


@pytest.mark.parametrize("sample", ["0000000000", "0000011111", "0110100110", "1111111110", "0100000001"])
def test_model_sizes_by_enumeration(sample):
    S = BitString(sample)
    everything = list(_all_strings(len(S)))
    for fam in DEFAULT_REGISTRY:
        for model in fam(S):
            assert model.contains(S)
            size = sum(model.contains(s) for s in everything)
            assert math.isclose(math.log2(size), model.log_size, abs_tol=1e-9), model.family


def test_log2_binom():
    for n, k in [(10, 3), (100, 50), (4096, 409)]:
        assert math.isclose(log2_binom(n, k), math.log2(math.comb(n, k)), rel_tol=1e-9)


def test_structure_function_macrostates():
    assert structure_function(BitString.zeros(4096)).macrostate.family == "constant"
    assert structure_function(sample_incompressible(4096, 7)).macrostate.family == "cube"
    half = concat(sample_incompressible(4096, 8), BitString.zeros(4096))
    sf = structure_function(half)
    assert sf.macrostate.family == "block_cylinder"
    assert abs(sf.log_size - 4096) < 1
    ks = [p[0] for p in sf.points]
    ls = [p[1] for p in sf.points]
    assert ks == sorted(ks) and ls == sorted(ls, reverse=True)
    assert sf.at(-1) == float("inf")


def test_structure_function_tracks_compressor():
    from kausal.complexity import estimate_K

    for s in [BitString.zeros(8192), sample_incompressible(8192, 9),
              concat(sample_incompressible(4096, 10), BitString.zeros(4096))]:
        sf = structure_function(s)
        k = estimate_K(s).value_bits
        assert abs(sf.k0 + sf.log_size - k) <= max(0.1 * k, 128)


def test_no_covering_model():
    with pytest.raises(NoCoveringModel):
        structure_function(BitString("0101"), registry=())


def test_second_law_reversible_trace():
    prog = random_program(4096, 300, 11)
    tr = ReversibleMachine(BitString.zeros(4096), prog).run(snapshot_every=10)
    audit = second_law_audit(tr)
    assert audit.violations == 0 and audit.pairs == len(tr) * (len(tr) - 1) // 2


def test_second_law_flags_erasure():
    # erasing a random tape is not reversible and must show up
    r = sample_incompressible(4096, 12)
    audit = second_law_audit([r, BitString.zeros(4096)])
    assert audit.violations == 1 and audit.worst_pair == (0, 1)


def test_landauer_sign():
    r = sample_incompressible(8192, 13)
    erase = landauer_ledger(r, BitString.zeros(8192))
    assert erase.bits > 8000 and erase.joules > 0
    assert landauer_ledger(BitString.zeros(8192), r).bits < 0


def test_mixing_demo_small():
    res = mixing_demo(64, 5000, 4, seed=1)
    frames = res["frames"]
    assert frames[0]["macrostate"] in ("block_cylinder", "run_count")
    assert frames[0]["log_size"] < frames[-1]["log_size"]
