import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kausal import codec
from kausal.bits import BitString, and_, concat, not_, sample_bits, sample_incompressible, xor
from kausal.complexity import (Thresholds, complexity_profile, estimate_K, estimate_K_cond,
                               get_compressor, judge, mutual_info_K)
from kausal.errors import MaskOutOfRange, TooShort
from kausal.rng import Stream

N = 100_000


def test_constant_and_periodic():
    assert estimate_K(BitString.zeros(N)).ratio() <= 0.02
    assert estimate_K(BitString(np.arange(N) % 2)).ratio() <= 0.02


def test_incompressible(big_random):
    s, _ = big_random
    assert estimate_K(s).ratio() >= 0.95
    assert judge("incompressible", s).passed


def test_conditionals(big_random):
    s, u = big_random
    assert estimate_K_cond(s, s).ratio() <= 0.05
    assert estimate_K_cond(not_(s), s).ratio() <= 0.05
    assert estimate_K_cond(s, None) == estimate_K(s).__class__(estimate_K(s).value_bits, N, "lz77b", "conditional")
    assert estimate_K_cond(u, s).ratio() >= 0.95


def test_mutual_information(big_random):
    s, u = big_random
    assert mutual_info_K(s, u).ratio() <= 0.05
    assert mutual_info_K(s, s).ratio() >= 0.9
    assert mutual_info_K(s, not_(s)).ratio() >= 0.9


def test_pr_output_given_remote_input(big_random):
    a, b = big_random
    x = sample_incompressible(N, 13)
    y = xor(x, and_(a, b))
    assert estimate_K_cond(y, b).ratio() >= 0.4


def test_masked_conditional():
    s = sample_bits(20_000, 4)
    mask = np.zeros(20_000, dtype=bool)
    mask[::4] = True
    est = estimate_K_cond(s, mask=mask)
    assert est.kind == "masked-conditional"
    assert est.value_bits == pytest.approx(5000, abs=50)
    assert estimate_K_cond(s, mask=BitString.zeros(20_000)).value_bits == 0
    with pytest.raises(MaskOutOfRange):
        estimate_K_cond(s, mask=[20_000])
    with pytest.raises(MaskOutOfRange):
        estimate_K_cond(s, mask=np.ones(5, dtype=bool))


def test_judgments(big_random):
    s, u = big_random
    assert judge("approx_zero", BitString.zeros(N)).passed
    assert judge("independent", (s, s)).passed is False
    assert judge("independent", (s, u)).passed is True
    both_zero = judge("independent", (BitString.zeros(N), BitString.ones(N)))
    assert both_zero.passed is None
    v = judge("cond_independent", (s, u, xor(s, u)))
    assert v.passed is False and v.margin < 0
    with pytest.raises(TooShort):
        judge("approx_zero", BitString.zeros(100))
    with pytest.raises(ValueError):
        judge("nonsense", s)


def test_thresholds_validation():
    with pytest.raises(ValueError):
        Thresholds(eps_zero=0.5, eps_incomp=0.4)
    assert Thresholds().replace(n_min=10).n_min == 10


def test_profiles():
    lengths = [4096, 8192, 16384, 32768]
    assert complexity_profile(lengths, BitString.zeros).slope <= 0.02
    assert complexity_profile(lengths, lambda n: sample_bits(n, 3)).slope >= 0.95

    def half(n):
        return concat(sample_bits(n // 2, 3), BitString.zeros(n - n // 2))

    fit = complexity_profile(lengths, half)
    assert fit.slope == pytest.approx(0.5, abs=0.05)
    assert fit.growth() == "linear"
    with pytest.raises(ValueError):
        complexity_profile([10, 20], BitString.zeros)


def _corpus(n=20_000):
    r1, r2 = sample_bits(n, 1), sample_bits(n, 2)
    return {
        "r1": r1, "r2": r2, "zeros": BitString.zeros(n), "ones": BitString.ones(n),
        "alt": BitString(np.arange(n) % 2),
        "half": concat(sample_bits(n // 2, 3), BitString.zeros(n - n // 2)),
        "not": not_(r1), "rot": r1.rotate(77), "xor": xor(r1, r2),
        "short_zeros": BitString.zeros(5000), "long": sample_bits(N, 9),
    }


def test_subadditivity_on_corpus():
    corpus = _corpus()
    k = {name: estimate_K(s).value_bits for name, s in corpus.items()}
    for a, x in corpus.items():
        for b, y in corpus.items():
            assert estimate_K(concat(x, y)).value_bits <= k[a] + k[b] + 64, (a, b)


def test_symmetry_on_corpus():
    corpus = _corpus()
    names = list(corpus)
    for i, a in enumerate(names):
        for b in names[i:]:
            x, y = corpus[a], corpus[b]
            gap = abs(mutual_info_K(x, y).value_bits - mutual_info_K(y, x).value_bits)
            assert gap <= 0.05 * min(len(x), len(y)), (a, b)


def test_monotone_condition_on_corpus():
    corpus = _corpus()
    names = ["r1", "r2", "zeros", "half", "not", "xor", "alt", "rot"]
    for a in names:
        for b in names:
            for c in names:
                x, y, z = corpus[a], corpus[b], corpus[c]
                assert (estimate_K_cond(x, (y, z)).value_bits
                        <= estimate_K_cond(x, y).value_bits + 128), (a, b, c)


def test_lossless_many_strings():
    rng = Stream(4, "lossless")
    sizes = rng.integers(600, 10_000) + 1
    kinds = rng.integers(5, 10_000)
    for n, kind in zip(sizes.tolist(), kinds.tolist()):
        if kind == 0:
            s = BitString(rng.bits(n))
        elif kind == 1:
            s = BitString(rng.bernoulli(0.05, n))
        elif kind == 2:
            s = BitString(np.tile(rng.bits(max(1, n // 7)), 8)[:n])
        elif kind == 3:
            s = BitString.zeros(n)
        else:
            s = concat(BitString(rng.bits(n // 2)), not_(BitString(rng.bits(n - n // 2))))
        segs = [s, s.rotate(3)] if n % 3 == 0 else [s]
        assert codec.decode(codec.encode(segs)) == segs


def test_container_layout():
    s = BitString("1011")
    blob = codec.encode([s])
    assert int.from_bytes(blob[:8], "little") == 4
    assert int.from_bytes(blob[8:12], "little") == 1
    assert int.from_bytes(blob[12:20], "little") == 4
    assert blob[20] == codec.MODE_STORED and blob[21:] == s.packed()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=3000))
def test_lossless_property(bits):
    s = BitString(bits)
    assert codec.decode(codec.encode([s])) == [s]
    assert 0 <= estimate_K(s).value_bits <= len(s)


@pytest.mark.parametrize("name", ["zlib", "bz2", "lzma"])
def test_byte_compressors(name):
    c = get_compressor(name)
    s = sample_bits(8192, 1)
    assert c.decode(c.encode([s, s])) == [s, s]
    assert estimate_K(BitString.zeros(8192), c).ratio() < 0.1
    assert estimate_K_cond(s, s, c).ratio() < 0.3


def test_determinism(big_random):
    s, _ = big_random
    assert estimate_K(concat(s, s[:50])).value_bits == estimate_K(concat(s, s[:50])).value_bits
    with pytest.raises(ValueError):
        get_compressor("nope")
