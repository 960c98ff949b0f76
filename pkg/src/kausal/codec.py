"""Built-in bit-oriented LZ77 compressor (``lz77b``).

The codec works on a list of *segments* (the strings of a joint or
conditional estimate, condition first).  Tokens are range coded bit by bit:

* a match token copies ``length >= MIN_MATCH`` bits from ``distance`` bits
  back (window ``WINDOW``), optionally complemented;
* a literal token codes one bit with an adaptive count model whose context
  is the previous stream bit plus the bits at the *same offset* in the
  three preceding segments.

The aligned context lets a conditional estimate notice position-wise
functions of the condition (copies, complements, ``a AND b`` ...), which a
plain sliding-window coder cannot see.  Container layout (little-endian)::

    u64  total bit count
    u32  segment count s
    u64  x s  segment bit lengths
    u8   mode (0 = stored, 1 = coded)
    ...  body: packed bits (stored) or range-coder bytes (coded)

The coded body is an LZMA-style binary range coder with 22-bit
probabilities.  ``docs/container.md`` has the token grammar.
"""

from __future__ import annotations

from typing import Sequence

import numba
import numpy as np

from .bits import BitString

WINDOW = 1 << 16
MIN_MATCH = 32
KEY_BITS = 24
HASH_BITS = 18
CHAIN_DEPTH = 16
N_ALIGNED = 3
COUNT_LIMIT = 1 << 16
RC_OVERHEAD_BITS = 8
LITERAL_PROBE = 512
MAX_MATCH = 1 << 16
NICE_MATCH = 1 << 12
SKIP_AFTER_REJECT = 256

_KEY_MASK = (1 << KEY_BITS) - 1
_WMASK = WINDOW - 1
PROB_BITS = 22
_PROB_ONE = 1 << PROB_BITS
_PROB_INIT = _PROB_ONE >> 1
_TOP = 1 << 24
_P_MIN = 64
_P_MAX = _PROB_ONE - 64
_N_LIT = 27 * 2
_GAMMA_CTX = 32

MODE_STORED = 0
MODE_CODED = 1


# -- range coder ------------------------------------------------------------
# st = [low, range, cache, cache_size, out_pos]

@numba.njit(cache=True)
def _shift_low(st, buf):
    low = st[0]
    if low < 0xFF000000 or low >= (1 << 32):
        carry = low >> 32
        temp = st[2]
        while True:
            buf[st[4]] = (temp + carry) & 0xFF
            st[4] += 1
            temp = 0xFF
            st[3] -= 1
            if st[3] == 0:
                break
        st[2] = (low >> 24) & 0xFF
    st[3] += 1
    st[0] = (low & 0x00FFFFFF) << 8


@numba.njit(cache=True)
def _enc(st, buf, p0, bit):
    bound = (st[1] * p0) >> PROB_BITS
    if bit == 0:
        st[1] = bound
    else:
        st[0] += bound
        st[1] -= bound
    while st[1] < _TOP:
        st[1] <<= 8
        _shift_low(st, buf)


@numba.njit(cache=True)
def _dec(ds, data, p0):
    # ds = [code, range, in_pos]
    bound = (ds[1] * p0) >> PROB_BITS
    if ds[0] < bound:
        ds[1] = bound
        bit = 0
    else:
        ds[0] -= bound
        ds[1] -= bound
        bit = 1
    while ds[1] < _TOP:
        ds[1] <<= 8
        nxt = 0
        if ds[2] < data.size:
            nxt = data[ds[2]]
        ds[2] += 1
        ds[0] = ((ds[0] << 8) | nxt) & 0xFFFFFFFF
    return bit


@numba.njit(cache=True)
def _adapt(probs, idx, bit):
    p = probs[idx]
    if bit == 0:
        probs[idx] = p + ((_PROB_ONE - p) >> 4)
    else:
        probs[idx] = p - (p >> 4)


@numba.njit(cache=True)
def _enc_adaptive(st, buf, probs, idx, bit):
    _enc(st, buf, probs[idx], bit)
    _adapt(probs, idx, bit)


@numba.njit(cache=True)
def _dec_adaptive(ds, data, probs, idx):
    bit = _dec(ds, data, probs[idx])
    _adapt(probs, idx, bit)
    return bit


@numba.njit(cache=True)
def _bit_length(v):
    nb = 0
    while v > 0:
        nb += 1
        v >>= 1
    return nb


@numba.njit(cache=True)
def _enc_gamma(st, buf, probs, v):
    # v >= 1: unary bit-length with adaptive contexts, then raw mantissa.
    nb = _bit_length(v)
    for j in range(nb - 1):
        _enc_adaptive(st, buf, probs, j, 1)
    _enc_adaptive(st, buf, probs, nb - 1, 0)
    for j in range(nb - 2, -1, -1):
        _enc(st, buf, _PROB_INIT, (v >> j) & 1)


@numba.njit(cache=True)
def _dec_gamma(ds, data, probs):
    nb = 1
    while _dec_adaptive(ds, data, probs, nb - 1) == 1:
        nb += 1
    v = 1
    for _ in range(nb - 1):
        v = (v << 1) | _dec(ds, data, _PROB_INIT)
    return v


# -- literal model ----------------------------------------------------------

@numba.njit(cache=True)
def _lit_p0(counts, ctx):
    c0 = counts[ctx, 0]
    c1 = counts[ctx, 1]
    p = ((2 * c0 + 1) << PROB_BITS) // (2 * (c0 + c1) + 2)
    if p < _P_MIN:
        p = _P_MIN
    elif p > _P_MAX:
        p = _P_MAX
    return p


@numba.njit(cache=True)
def _lit_update(counts, ctx, bit):
    counts[ctx, bit] += 1
    if counts[ctx, 0] + counts[ctx, 1] > COUNT_LIMIT:
        counts[ctx, 0] = (counts[ctx, 0] + 1) >> 1
        counts[ctx, 1] = (counts[ctx, 1] + 1) >> 1


@numba.njit(cache=True)
def _lit_ctx(bits, i, seg, off, starts, lens):
    actx = 0
    mul = 1
    for r in range(1, N_ALIGNED + 1):
        sj = seg - r
        t = 2
        if sj >= 0 and off < lens[sj]:
            t = bits[starts[sj] + off]
        actx += t * mul
        mul *= 3
    h = 0
    if i >= 1:
        h = bits[i - 1]
    return actx * 2 + h


# -- encoder ----------------------------------------------------------------

@numba.njit(cache=True)
def _match_cost(flag_c, prev_match, length, dist):
    # rough token cost in bits; short chance matches in noise are not worth it
    p1 = _PROB_ONE - _lit_p0(flag_c, prev_match)
    flag = np.log2(_PROB_ONE / p1)
    return flag + 1.0 + 2 * _bit_length(length - MIN_MATCH + 1) - 1 + 2 * _bit_length(dist) - 1

@numba.njit(cache=True)
def _literal_cost(counts, flag_c, bits, i, length, seg, seg_end, starts, lens):
    # cost of coding the next `length` bits as literals under the current
    # (frozen) model, sampled over at most LITERAL_PROBE bits
    probe = min(length, LITERAL_PROBE)
    f0 = flag_c[0, 0] + 0.5
    f1 = flag_c[0, 1] + 0.5
    cost = 0.0
    for p in range(i, i + probe):
        while p >= seg_end:
            seg += 1
            seg_end += lens[seg]
        ctx = _lit_ctx(bits, p, seg, p - starts[seg], starts, lens)
        p0 = _lit_p0(counts, ctx)
        if bits[p] == 0:
            cost += np.log2(_PROB_ONE / p0)
        else:
            cost += np.log2(_PROB_ONE / (_PROB_ONE - p0))
        # the literal flags adapt as the run of literals goes on
        cost += np.log2((f0 + f1) / f0)
        f0 += 1.0
    return cost * length / probe


@numba.njit(cache=True)
def _encode(bits, starts, lens):
    n = bits.size
    buf = np.zeros(3 * n + 64, dtype=np.uint8)
    st = np.zeros(5, dtype=np.int64)
    st[1] = 0xFFFFFFFF
    st[3] = 1

    flag_c = np.zeros((2, 2), dtype=np.int64)
    inv_p = np.full(1, _PROB_INIT, dtype=np.int64)
    len_p = np.full(_GAMMA_CTX, _PROB_INIT, dtype=np.int64)
    dist_p = np.full(_GAMMA_CTX, _PROB_INIT, dtype=np.int64)
    counts = np.zeros((_N_LIT, 2), dtype=np.int64)
    # encoder-only copy of the literal model that also learns from matched
    # bits; it prices the literal alternative when a match is on offer
    shadow = np.zeros((_N_LIT, 2), dtype=np.int64)

    nkeys = n - KEY_BITS + 1
    if nkeys < 0:
        nkeys = 0
    keys = np.zeros(max(nkeys, 1), dtype=np.int64)
    if nkeys > 0:
        k = 0
        for j in range(KEY_BITS):
            k = (k << 1) | bits[j]
        keys[0] = k
        for p in range(1, nkeys):
            k = ((k << 1) | bits[p + KEY_BITS - 1]) & _KEY_MASK
            keys[p] = k
    head = np.zeros(1 << HASH_BITS, dtype=np.int64)
    chain = np.zeros(WINDOW, dtype=np.int64)
    hshift = 32 - HASH_BITS

    seg = 0
    seg_end = lens[0] if lens.size > 0 else n
    i = 0
    inserted = 0
    prev_match = 0
    search_from = 0
    while i < n:
        best_len = 0
        best_dist = 0
        best_inv = 0
        if i < nkeys and i >= search_from:
            for pol in range(2):
                if best_len >= NICE_MATCH:
                    break
                key = keys[i]
                if pol == 1:
                    key ^= _KEY_MASK
                h = ((key * 2654435761) & 0xFFFFFFFF) >> hshift
                cand = head[h] - 1
                depth = 0
                while cand >= 0 and i - cand <= WINDOW and depth < CHAIN_DEPTH and best_len < NICE_MATCH:
                    if keys[cand] == key:
                        L = 0
                        while i + L < n and L < MAX_MATCH and (bits[cand + L] ^ pol) == bits[i + L]:
                            L += 1
                        if L > best_len:
                            best_len = L
                            best_dist = i - cand
                            best_inv = pol
                    depth += 1
                    cand = chain[cand & _WMASK] - 1
        take = False
        if best_len >= MIN_MATCH:
            take = (_match_cost(flag_c, prev_match, best_len, best_dist)
                    < _literal_cost(shadow, flag_c, bits, i, best_len, seg, seg_end, starts, lens))
            if not take:
                # literals are cheaper here; overlapping offers would be too
                search_from = i + min(best_len, SKIP_AFTER_REJECT)
        if take:
            _enc(st, buf, _lit_p0(flag_c, prev_match), 1)
            _lit_update(flag_c, prev_match, 1)
            _enc_adaptive(st, buf, inv_p, 0, best_inv)
            _enc_gamma(st, buf, len_p, best_len - MIN_MATCH + 1)
            _enc_gamma(st, buf, dist_p, best_dist)
            for p in range(i, i + best_len):
                while p >= seg_end:
                    seg += 1
                    seg_end += lens[seg]
                _lit_update(shadow, _lit_ctx(bits, p, seg, p - starts[seg], starts, lens), bits[p])
            step = best_len
            prev_match = 1
        else:
            _enc(st, buf, _lit_p0(flag_c, prev_match), 0)
            _lit_update(flag_c, prev_match, 0)
            while i >= seg_end:
                seg += 1
                seg_end += lens[seg]
            ctx = _lit_ctx(bits, i, seg, i - starts[seg], starts, lens)
            b = bits[i]
            _enc(st, buf, _lit_p0(counts, ctx), b)
            _lit_update(counts, ctx, b)
            _lit_update(shadow, ctx, b)
            step = 1
            prev_match = 0
        i += step
        while inserted < i and inserted < nkeys:
            key = keys[inserted]
            h = ((key * 2654435761) & 0xFFFFFFFF) >> hshift
            chain[inserted & _WMASK] = head[h]
            head[h] = inserted + 1
            inserted += 1
    # flush the value in [low, low + range) with the most trailing zeros;
    # trailing zero bytes are implied because the decoder pads with zeros
    low = st[0]
    for k in range(40, -1, -1):
        mask = (1 << k) - 1
        v = (low + mask) & ~mask
        if v < low + st[1]:
            break
    st[0] = v
    for _ in range(5):
        _shift_low(st, buf)
    end = st[4]
    while end > 1 and buf[end - 1] == 0:
        end -= 1
    return buf[:end].copy()


@numba.njit(cache=True)
def _decode(data, starts, lens, n):
    bits = np.zeros(n, dtype=np.uint8)
    ds = np.zeros(3, dtype=np.int64)
    ds[1] = 0xFFFFFFFF
    for _ in range(5):
        nxt = 0
        if ds[2] < data.size:
            nxt = data[ds[2]]
        ds[2] += 1
        ds[0] = ((ds[0] << 8) | nxt) & 0xFFFFFFFF

    flag_c = np.zeros((2, 2), dtype=np.int64)
    inv_p = np.full(1, _PROB_INIT, dtype=np.int64)
    len_p = np.full(_GAMMA_CTX, _PROB_INIT, dtype=np.int64)
    dist_p = np.full(_GAMMA_CTX, _PROB_INIT, dtype=np.int64)
    counts = np.zeros((_N_LIT, 2), dtype=np.int64)

    seg = 0
    seg_end = lens[0] if lens.size > 0 else n
    i = 0
    prev_match = 0
    while i < n:
        is_match = _dec(ds, data, _lit_p0(flag_c, prev_match))
        _lit_update(flag_c, prev_match, is_match)
        if is_match == 1:
            pol = _dec_adaptive(ds, data, inv_p, 0)
            L = _dec_gamma(ds, data, len_p) + MIN_MATCH - 1
            d = _dec_gamma(ds, data, dist_p)
            if d > i or i + L > n:
                return bits, False
            for j in range(L):
                bits[i + j] = bits[i + j - d] ^ pol
            i += L
            prev_match = 1
        else:
            while i >= seg_end:
                seg += 1
                seg_end += lens[seg]
            ctx = _lit_ctx(bits, i, seg, i - starts[seg], starts, lens)
            b = _dec(ds, data, _lit_p0(counts, ctx))
            bits[i] = b
            _lit_update(counts, ctx, b)
            i += 1
            prev_match = 0
    return bits, True


# -- container --------------------------------------------------------------

def _layout(segments: Sequence[BitString]):
    lens = np.array([len(s) for s in segments], dtype=np.int64)
    starts = np.zeros(lens.size, dtype=np.int64)
    if lens.size:
        starts[1:] = np.cumsum(lens)[:-1]
    return starts, lens


def _header(lens: np.ndarray) -> bytes:
    total = int(lens.sum())
    out = total.to_bytes(8, "little") + int(lens.size).to_bytes(4, "little")
    return out + b"".join(int(v).to_bytes(8, "little") for v in lens)


def _body(segments: Sequence[BitString]):
    nonempty = [s for s in segments]
    starts, lens = _layout(nonempty)
    n = int(lens.sum())
    if n == 0:
        return lens, MODE_STORED, b""
    bits = np.concatenate([s.array for s in nonempty]).astype(np.uint8)
    coded = _encode(bits, starts, lens).tobytes()
    stored = np.packbits(bits).tobytes()
    if 8 * len(coded) - RC_OVERHEAD_BITS < 8 * len(stored):
        return lens, MODE_CODED, coded
    return lens, MODE_STORED, stored


def body_bits(mode: int, body: bytes, n: int) -> int:
    """Information-carrying bits of a body, fixed coder overhead removed."""
    if mode == MODE_STORED:
        return n
    return max(0, 8 * len(body) - RC_OVERHEAD_BITS)


def encode(segments: Sequence[BitString]) -> bytes:
    lens, mode, body = _body(segments)
    return _header(lens) + bytes([mode]) + body


def decode(blob: bytes) -> list:
    if len(blob) < 12:
        raise ValueError("container shorter than its header")
    total = int.from_bytes(blob[:8], "little")
    count = int.from_bytes(blob[8:12], "little")
    pos = 12 + 8 * count
    lens = np.array(
        [int.from_bytes(blob[12 + 8 * j: 20 + 8 * j], "little") for j in range(count)], dtype=np.int64
    )
    if int(lens.sum()) != total or len(blob) < pos + 1:
        raise ValueError("inconsistent container header")
    mode = blob[pos]
    body = blob[pos + 1:]
    starts = np.zeros(count, dtype=np.int64)
    if count:
        starts[1:] = np.cumsum(lens)[:-1]
    if mode == MODE_STORED:
        bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8))[:total]
    elif mode == MODE_CODED:
        bits, ok = _decode(np.frombuffer(body, dtype=np.uint8).astype(np.int64), starts, lens, total)
        if not ok:
            raise ValueError("corrupt token stream")
    else:
        raise ValueError(f"unknown container mode {mode}")
    return [BitString(bits[s: s + l]) for s, l in zip(starts, lens)]


def length_bits(segments: Sequence[BitString]) -> int:
    """Compressed size of the joint payload in bits, headers excluded."""
    lens, mode, body = _body(segments)
    return body_bits(mode, body, int(lens.sum()))


def container_bits(segments: Sequence[BitString]) -> int:
    """Full container size in bits, header and mode byte included."""
    return 8 * len(encode(segments))
