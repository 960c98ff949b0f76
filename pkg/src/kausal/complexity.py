"""Compressor-backed complexity estimates and thresholded judgments.

Kolmogorov complexity is replaced by compressed length under a fixed,
deterministic compressor.  Conditional complexity is the extra cost of the
subject once the condition has been coded::

    K(x | y)  ~  C(y ; x) - C(y)

where the compressor sees the condition and subject as separate aligned
segments.  Asymptotic relations become ratio tests against ``Thresholds``
and every ``Verdict`` carries a signed margin (positive on the side of the
reported answer being *true*) so experiments can sweep thresholds.
"""

from __future__ import annotations

import bz2
import functools
import lzma
import math
import zlib
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import codec
from .bits import BitString, SymbolString, as_bits
from .errors import MaskOutOfRange, TooShort

Subject = Union[BitString, SymbolString, Sequence[BitString]]


def segments(s) -> tuple:
    """Flatten a string or a (nested) tuple of strings into codec segments."""
    if s is None:
        return ()
    if isinstance(s, (BitString, SymbolString, str)):
        return (as_bits(s),)
    out = []
    for part in s:
        out.extend(segments(part))
    return tuple(out)


def _total(segs) -> int:
    return sum(len(s) for s in segs)


# -- compressors ------------------------------------------------------------

class Compressor(ABC):
    """Lossless compressor used as the complexity proxy.

    ``length`` returns the body size in bits with fixed container overhead
    removed; ``compress(payload, helper)`` is the helper-assisted length,
    where the helper is coded first and its own cost subtracted.
    """

    id: str = "abstract"

    @abstractmethod
    def encode(self, segs: Sequence[BitString]) -> bytes: ...

    @abstractmethod
    def decode(self, blob: bytes) -> list: ...

    @abstractmethod
    def _length(self, segs: tuple) -> int: ...

    def length(self, s) -> int:
        return _cached_length(self, segments(s))

    def compress(self, payload, helper=None) -> int:
        if helper is None or _total(segments(helper)) == 0:
            return self.length(payload)
        h = segments(helper)
        return self.length(h + segments(payload)) - self.length(h)

    def __repr__(self):
        return f"{type(self).__name__}(id={self.id!r})"


@functools.lru_cache(maxsize=512)
def _cached_length(compressor: Compressor, segs: tuple) -> int:
    if _total(segs) == 0:
        return 0
    return compressor._length(segs)


class LZ77Bit(Compressor):
    """The built-in bit-oriented LZ77 coder (see :mod:`kausal.codec`)."""

    id = "lz77b"

    def encode(self, segs):
        return codec.encode(segments(segs))

    def decode(self, blob):
        return codec.decode(blob)

    def _length(self, segs):
        return codec.length_bits(segs)

    def __hash__(self):
        return hash(self.id)

    def __eq__(self, other):
        return isinstance(other, LZ77Bit)


class ByteCompressor(Compressor):
    """Adapter for byte-oriented stdlib compressors (sensitivity studies).

    Segments are packed and concatenated, so no aligned context is
    available; only plain repeats are visible to these compressors.
    """

    def __init__(self, id: str, pack: Callable[[bytes], bytes], unpack: Callable[[bytes], bytes]):
        self.id = id
        self._pack = pack
        self._unpack = unpack
        self._empty = 8 * len(pack(b""))

    def _raw(self, segs) -> bytes:
        if not segs:
            return b""
        return np.packbits(np.concatenate([s.array for s in segs])).tobytes()

    def encode(self, segs):
        segs = segments(segs)
        lens = np.array([len(s) for s in segs], dtype=np.int64)
        return codec._header(lens) + self._pack(self._raw(segs))

    def decode(self, blob):
        count = int.from_bytes(blob[8:12], "little")
        lens = [int.from_bytes(blob[12 + 8 * j: 20 + 8 * j], "little") for j in range(count)]
        raw = self._unpack(blob[12 + 8 * count:])
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
        out, pos = [], 0
        for length in lens:
            out.append(BitString(bits[pos: pos + length]))
            pos += length
        return out

    def _length(self, segs):
        return max(0, 8 * len(self._pack(self._raw(segs))) - self._empty)

    def __hash__(self):
        return hash(self.id)

    def __eq__(self, other):
        return isinstance(other, ByteCompressor) and other.id == self.id


_REGISTRY = {
    "lz77b": LZ77Bit,
    "zlib": lambda: ByteCompressor("zlib", lambda b: zlib.compress(b, 9), zlib.decompress),
    "bz2": lambda: ByteCompressor("bz2", lambda b: bz2.compress(b, 9), bz2.decompress),
    "lzma": lambda: ByteCompressor("lzma", lambda b: lzma.compress(b, preset=9), lzma.decompress),
}


@functools.lru_cache(maxsize=None)
def get_compressor(name: str = "lz77b") -> Compressor:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown compressor {name!r}; known: {sorted(_REGISTRY)}") from None


def default_compressor() -> Compressor:
    return get_compressor("lz77b")


# -- estimates --------------------------------------------------------------

@dataclass(frozen=True)
class ComplexityEstimate:
    value_bits: float
    n: int
    compressor_id: str
    kind: str = "plain"

    def ratio(self) -> float:
        if self.n <= 0:
            raise ZeroDivisionError("ratio of an empty subject")
        return self.value_bits / self.n


@dataclass(frozen=True)
class Thresholds:
    eps_zero: float = 0.05
    eps_incomp: float = 0.90
    eps_dep: float = 0.05
    n_min: int = 1 << 12

    def __post_init__(self):
        if not 0 < self.eps_zero < self.eps_incomp <= 1:
            raise ValueError("need 0 < eps_zero < eps_incomp <= 1")
        if not 0 < self.eps_dep:
            raise ValueError("eps_dep must be positive")
        if self.n_min < 1:
            raise ValueError("n_min must be >= 1")

    def replace(self, **changes) -> "Thresholds":
        values = {k: getattr(self, k) for k in ("eps_zero", "eps_incomp", "eps_dep", "n_min")}
        values.update(changes)
        return Thresholds(**values)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a thresholded test.

    ``passed`` is ``None`` when the relation is indeterminate (for example
    an independence test where both sides have vanishing complexity).
    """

    passed: Optional[bool]
    margin: float
    kind: str = ""
    details: dict = field(default_factory=dict, compare=False)

    def __bool__(self):
        return bool(self.passed)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "margin": round(float(self.margin), 6), "kind": self.kind,
                "details": _jsonable(self.details)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        # significant digits, not decimals: joule-scale values are ~1e-16
        return float(f"{float(obj):.10g}")
    if isinstance(obj, ComplexityEstimate):
        return {"value_bits": obj.value_bits, "n": obj.n, "ratio": round(obj.ratio(), 6) if obj.n else None}
    if isinstance(obj, Verdict):
        return obj.to_dict()
    return obj


def estimate_K(s: Subject, c: Compressor = None) -> ComplexityEstimate:
    """Compressed length of ``s`` clipped to ``[0, len(s)]``."""
    c = c or default_compressor()
    segs = segments(s)
    n = _total(segs)
    if n < 1:
        raise ValueError("estimate_K needs a nonempty subject")
    value = min(max(c.length(segs), 0), n)
    return ComplexityEstimate(value, n, c.id, "plain")


def _mask_positions(mask, n: int) -> np.ndarray:
    if isinstance(mask, BitString):
        if len(mask) != n:
            raise MaskOutOfRange(f"mask length {len(mask)} != subject length {n}")
        return np.flatnonzero(mask.array)
    arr = np.asarray(mask)
    if arr.dtype == bool:
        if arr.size != n:
            raise MaskOutOfRange(f"mask length {arr.size} != subject length {n}")
        return np.flatnonzero(arr)
    arr = arr.astype(np.int64).reshape(-1)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise MaskOutOfRange(f"mask positions must lie in [0, {n})")
    return np.unique(arr)


def estimate_K_cond(x: Subject, y=None, c: Compressor = None, mask=None) -> ComplexityEstimate:
    """Conditional estimate ``K(x | y)``.

    With ``mask`` the condition is used structurally: only the masked
    positions of ``x`` are coded (the caller asserts that the remaining
    positions are fixed by the condition).
    """
    c = c or default_compressor()
    xs = segments(x)
    n = _total(xs)
    if n < 1:
        raise ValueError("estimate_K_cond needs a nonempty subject")
    if mask is not None:
        if len(xs) != 1:
            raise ValueError("masked estimates need a single subject string")
        pos = _mask_positions(mask, n)
        if pos.size == 0:
            return ComplexityEstimate(0, n, c.id, "masked-conditional")
        value = min(max(c.length(xs[0].restrict(pos)), 0), int(pos.size))
        return ComplexityEstimate(value, n, c.id, "masked-conditional")
    ys = segments(y)
    if _total(ys) == 0:
        est = estimate_K(xs, c)
        return ComplexityEstimate(est.value_bits, n, c.id, "conditional")
    value = c.length(ys + xs) - c.length(ys)
    return ComplexityEstimate(min(max(value, 0), n), n, c.id, "conditional")


def log2_binom(n: int, k: int) -> float:
    """``log2 C(n, k)``, the bits needed to single out k positions among n."""
    if k < 0 or k > n:
        return float("-inf")
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


def mutual_info_K(x: Subject, y: Subject, c: Compressor = None) -> ComplexityEstimate:
    """``I_K(x; y) = K(x) - K(x | y)``, clipped at zero."""
    c = c or default_compressor()
    kx = estimate_K(x, c)
    kxy = estimate_K_cond(x, y, c)
    return ComplexityEstimate(max(0, kx.value_bits - kxy.value_bits), kx.n, c.id, "mutual")


def _require_length(th: "Thresholds", *subjects):
    for s in subjects:
        n = s.n if isinstance(s, ComplexityEstimate) else _total(segments(s))
        if n < th.n_min:
            raise TooShort(f"subject length {n} below n_min={th.n_min}")


def judge(kind: str, inputs, th: Thresholds = None, c: Compressor = None) -> Verdict:
    """Thresholded surrogate of the asymptotic relations.

    kinds: ``approx_zero`` (K/n <= eps_zero), ``incompressible``
    (K/n >= eps_incomp), ``independent`` (I_K/min-len < eps_dep) and
    ``cond_independent`` (K(a|c)+K(b|c)-K(a,b|c) < eps_dep * min-len).
    """
    th = th or Thresholds()
    c = c or default_compressor()
    if kind in ("approx_zero", "incompressible"):
        subject = inputs
        _require_length(th, subject)
        est = subject if isinstance(subject, ComplexityEstimate) else estimate_K(subject, c)
        r = est.ratio()
        if kind == "approx_zero":
            return Verdict(r <= th.eps_zero, th.eps_zero - r, kind, {"ratio": r})
        return Verdict(r >= th.eps_incomp, r - th.eps_incomp, kind, {"ratio": r})

    if kind == "independent":
        x, y = inputs
        _require_length(th, x, y)
        m = min(_total(segments(x)), _total(segments(y)))
        kx, ky = estimate_K(x, c), estimate_K(y, c)
        joint = estimate_K((x, y), c)
        gap = max(0.0, kx.value_bits + ky.value_bits - joint.value_bits)
        r = gap / m
        details = {"K_x": kx.value_bits, "K_y": ky.value_bits, "K_xy": joint.value_bits, "ratio": r}
        if kx.ratio() <= th.eps_zero and ky.ratio() <= th.eps_zero:
            return Verdict(None, th.eps_dep - r, kind, details)
        return Verdict(r < th.eps_dep, th.eps_dep - r, kind, details)

    if kind == "cond_independent":
        x, y, z = inputs
        _require_length(th, x, y)
        m = min(_total(segments(x)), _total(segments(y)))
        kx = estimate_K_cond(x, z, c)
        ky = estimate_K_cond(y, z, c)
        kxy = estimate_K_cond((x, y), z, c)
        gap = max(0.0, kx.value_bits + ky.value_bits - kxy.value_bits)
        r = gap / m
        details = {"K_x_given_z": kx.value_bits, "K_y_given_z": ky.value_bits,
                   "K_xy_given_z": kxy.value_bits, "ratio": r}
        if kx.value_bits / kx.n <= th.eps_zero and ky.value_bits / ky.n <= th.eps_zero:
            return Verdict(None, th.eps_dep - r, kind, details)
        return Verdict(r < th.eps_dep, th.eps_dep - r, kind, details)

    raise ValueError(f"unknown judgment kind {kind!r}")


@dataclass(frozen=True)
class ProfileFit:
    lengths: tuple
    values: tuple
    ratios: tuple
    slope: float
    intercept: float

    def growth(self, th: Thresholds = None) -> str:
        """``'linear'`` (Theta(n)) or ``'sublinear'`` (o(n)) at these thresholds."""
        th = th or Thresholds()
        return "sublinear" if self.slope <= th.eps_zero else "linear"


def complexity_profile(lengths: Sequence[int], producer: Callable[[int], BitString],
                       c: Compressor = None) -> ProfileFit:
    """Least-squares slope of estimated complexity against prefix length."""
    lengths = [int(v) for v in lengths]
    if len(lengths) < 3:
        raise ValueError("a profile needs at least three lengths")
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("lengths must be strictly increasing")
    c = c or default_compressor()
    values = [estimate_K(producer(n), c).value_bits for n in lengths]
    slope, intercept = np.polyfit(np.array(lengths, float), np.array(values, float), 1)
    ratios = tuple(v / n for v, n in zip(values, lengths))
    return ProfileFit(tuple(lengths), tuple(values), ratios, float(slope), float(intercept))
