"""Bit and symbol strings, element-wise algebra, seeded sampling and file I/O.

``BitString`` is the carrier of every "factual" string (inputs, outputs,
tapes, control strings).  Values are immutable: the backing array is a
read-only ``uint8`` array holding 0/1, so instances can be shared freely
between threads.
"""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import LengthMismatch, MalformedFile
from .rng import Seed, Stream, as_seed

HEADER_BYTES = 8


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    arr.flags.writeable = False
    return arr


class BitString:
    """Finite binary string.

    Construct from a ``'0101'`` string, an iterable of 0/1 ints, or a numpy
    array.  Indexing with an int returns the bit, with a slice or boolean /
    integer array returns a new ``BitString``.
    """

    __slots__ = ("_bits",)

    def __init__(self, bits: Union[str, Iterable[int], np.ndarray, "BitString"] = ()):
        if isinstance(bits, BitString):
            self._bits = bits._bits
            return
        if isinstance(bits, str):
            raw = np.frombuffer(bits.encode("ascii"), dtype=np.uint8)
            if raw.size and not np.all((raw == 48) | (raw == 49)):
                raise ValueError("bit strings may contain only '0' and '1'")
            arr = raw - 48
        else:
            arr = np.asarray(bits if isinstance(bits, np.ndarray) else list(bits))
            if arr.size and not np.all((arr == 0) | (arr == 1)):
                raise ValueError("bits must be 0 or 1")
        self._bits = _frozen(np.asarray(arr, dtype=np.uint8).reshape(-1))

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "BitString":
        out = cls.__new__(cls)
        out._bits = _frozen(arr)
        return out

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls._wrap(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> "BitString":
        return cls._wrap(np.ones(n, dtype=np.uint8))

    @classmethod
    def from_packed(cls, payload: bytes, n: int) -> "BitString":
        arr = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
        return cls._wrap(arr[:n])

    @property
    def array(self) -> np.ndarray:
        """Read-only uint8 view of the bits."""
        return self._bits

    def packed(self) -> bytes:
        return np.packbits(self._bits).tobytes()

    def __len__(self) -> int:
        return int(self._bits.size)

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return int(self._bits[key])
        return BitString._wrap(self._bits[key])

    def __iter__(self):
        return iter(self._bits.tolist())

    def __add__(self, other: "BitString") -> "BitString":
        return concat(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._bits.size == other._bits.size and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((len(self), self.packed()))

    def __str__(self) -> str:
        return (self._bits + 48).tobytes().decode("ascii")

    def __repr__(self) -> str:
        text = str(self)
        if len(text) > 64:
            text = text[:60] + "..."
        return f"BitString('{text}', len={len(self)})"

    def count(self) -> int:
        """Number of 1 bits."""
        return int(self._bits.sum(dtype=np.int64))

    def restrict(self, positions) -> "BitString":
        return BitString._wrap(self._bits[np.asarray(positions)])

    def permute(self, perm: np.ndarray) -> "BitString":
        return BitString._wrap(self._bits[perm])

    def rotate(self, k: int) -> "BitString":
        return BitString._wrap(np.roll(self._bits, -k))


def concat(*parts: BitString) -> BitString:
    if not parts:
        return BitString()
    return BitString._wrap(np.concatenate([p.array for p in parts]))


class SymbolString:
    """String over the alphabet ``{1, ..., m}``."""

    __slots__ = ("_symbols", "m")

    def __init__(self, symbols, m: int):
        if m < 2:
            raise ValueError("alphabet size m must be >= 2")
        arr = np.asarray(list(symbols) if not isinstance(symbols, np.ndarray) else symbols, dtype=np.int64)
        arr = arr.reshape(-1)
        if arr.size and (arr.min() < 1 or arr.max() > m):
            raise ValueError(f"symbols must lie in 1..{m}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self._symbols = arr
        self.m = int(m)

    @property
    def array(self) -> np.ndarray:
        return self._symbols

    def __len__(self) -> int:
        return int(self._symbols.size)

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return int(self._symbols[key])
        return SymbolString(self._symbols[key], self.m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolString):
            return NotImplemented
        return self.m == other.m and bool(np.array_equal(self._symbols, other._symbols))

    def __hash__(self) -> int:
        return hash((self.m, self._symbols.tobytes()))

    def __str__(self) -> str:
        return " ".join(map(str, self._symbols.tolist()))

    def __repr__(self) -> str:
        return f"SymbolString(len={len(self)}, m={self.m})"

    @property
    def width(self) -> int:
        return max(1, math.ceil(math.log2(self.m)))

    def to_bits(self) -> BitString:
        """Fixed-width big-endian binary encoding of ``symbol - 1``."""
        w = self.width
        vals = (self._symbols - 1)[:, None]
        shifts = np.arange(w - 1, -1, -1)
        return BitString._wrap(((vals >> shifts) & 1).astype(np.uint8).reshape(-1))


def as_bits(s) -> BitString:
    """Coerce a BitString / SymbolString / str to a BitString."""
    if isinstance(s, BitString):
        return s
    if isinstance(s, SymbolString):
        return s.to_bits()
    return BitString(s)


# -- element-wise algebra ---------------------------------------------------

_BINARY = {
    "XOR": np.bitwise_xor,
    "AND": np.bitwise_and,
    "EQ": lambda x, y: (x == y).astype(np.uint8),
}


def elementwise(kind: str, a: BitString, b: BitString = None) -> BitString:
    """Position-wise logic; ``kind`` names the operation."""
    kind = kind.upper()
    if kind == "NOT":
        return BitString._wrap(1 - a.array)
    if kind not in _BINARY:
        raise ValueError(f"unknown element-wise operation {kind!r}")
    if b is None or len(a) != len(b):
        raise LengthMismatch(f"{kind} needs equal lengths, got {len(a)} and {None if b is None else len(b)}")
    return BitString._wrap(_BINARY[kind](a.array, b.array))


def xor(a, b):
    return elementwise("XOR", a, b)


def and_(a, b):
    return elementwise("AND", a, b)


def not_(a):
    return elementwise("NOT", a)


# -- seeded sampling --------------------------------------------------------

def sample_bits(n: int, seed, label: str = "bits") -> BitString:
    """Raw generator output, no incompressibility gate."""
    return BitString._wrap(Stream(seed, label).bits(n))


def sample_incompressible(n: int, seed, compressor=None, thresholds=None) -> BitString:
    """Seeded string that passes the incompressibility gate.

    The gate runs only when ``n >= thresholds.n_min``; below that a verdict
    is meaningless and the raw draw is returned.  A failed gate (never
    observed in practice) moves to the next attempt label.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    from .complexity import Thresholds, default_compressor, judge

    th = thresholds or Thresholds()
    c = compressor or default_compressor()
    seed = as_seed(seed)
    for attempt in range(16):
        s = sample_bits(n, seed, f"incompressible/{attempt}")
        if n < th.n_min or judge("incompressible", s, th, c).passed:
            return s
    raise RuntimeError(f"no incompressible draw of length {n} from seed {seed.value}")


def sample_symbols(n: int, m: int, seed, label: str = "symbols") -> SymbolString:
    return SymbolString(Stream(seed, label).integers(m, n) + 1, m)


# -- file I/O ---------------------------------------------------------------

def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_bitstring(path, s: BitString, format: str = "ascii01") -> None:
    path = Path(path)
    if format == "ascii01":
        _atomic_write(path, str(s).encode("ascii"))
    elif format == "packed":
        _atomic_write(path, len(s).to_bytes(HEADER_BYTES, "little") + s.packed())
    else:
        raise ValueError(f"unknown format {format!r}")


def read_bitstring(path, format: str = "ascii01") -> BitString:
    data = Path(path).read_bytes()
    if format == "ascii01":
        if data.endswith(b"\n"):
            data = data[:-1]
        raw = np.frombuffer(data, dtype=np.uint8)
        bad = np.flatnonzero((raw != 48) & (raw != 49))
        if bad.size:
            raise MalformedFile(f"{path}: byte {data[bad[0]]!r} at offset {bad[0]} is not '0' or '1'")
        return BitString._wrap(raw - 48)
    if format == "packed":
        if len(data) < HEADER_BYTES:
            raise MalformedFile(f"{path}: missing {HEADER_BYTES}-byte length header")
        n = int.from_bytes(data[:HEADER_BYTES], "little")
        payload = data[HEADER_BYTES:]
        if len(payload) != -(-n // 8):
            raise MalformedFile(f"{path}: expected {-(-n // 8)} payload bytes for {n} bits, found {len(payload)}")
        s = BitString.from_packed(payload, n)
        if n % 8 and payload[-1] & ((1 << (8 - n % 8)) - 1):
            raise MalformedFile(f"{path}: nonzero padding bits")
        return s
    raise ValueError(f"unknown format {format!r}")


def write_symbols(path, s: SymbolString) -> None:
    _atomic_write(Path(path), str(s).encode("ascii"))


def read_symbols(path, m: int) -> SymbolString:
    text = Path(path).read_text(encoding="ascii").strip()
    try:
        values = [int(tok) for tok in text.split(" ")] if text else []
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from None
    try:
        return SymbolString(values, m)
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from None


__all__ = [
    "BitString",
    "SymbolString",
    "Seed",
    "as_bits",
    "concat",
    "elementwise",
    "xor",
    "and_",
    "not_",
    "sample_bits",
    "sample_incompressible",
    "sample_symbols",
    "read_bitstring",
    "write_bitstring",
    "read_symbols",
    "write_symbols",
]
