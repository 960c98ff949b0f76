"""Counter-mode SHA-256 generator (``sha256-ctr-v1``).

Every pseudorandom bit in kausal comes from this generator so that runs are
bit-identical across platforms and reproducible from any language with a
SHA-256 primitive.  The construction:

    key     = SHA256(b"kausal/sha256-ctr-v1" || seed_le32 || label_utf8)
    block_j = SHA256(key || j_le64)            j = 0, 1, 2, ...
    stream  = block_0 || block_1 || ...

``seed_le32`` is the 256-bit seed as 32 little-endian bytes.  Bits are read
most-significant first within each byte; 64-bit words are read as
little-endian 8-byte groups; floats are ``word >> 11`` scaled by ``2**-53``;
bounded integers in ``[0, m)`` are ``word % m`` (bias below ``2**-56`` for
the alphabets used here).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_DOMAIN = b"kausal/sha256-ctr-v1"
SEED_BITS = 256


@dataclass(frozen=True)
class Seed:
    """A 256-bit generator seed."""

    value: int

    def __post_init__(self):
        if not 0 <= int(self.value) < 1 << SEED_BITS:
            raise ValueError(f"seed must lie in [0, 2**{SEED_BITS}), got {self.value}")

    def to_bytes(self) -> bytes:
        return int(self.value).to_bytes(SEED_BITS // 8, "little")

    def derive(self, label: str) -> "Seed":
        """Child seed for an independent sub-stream."""
        digest = hashlib.sha256(_DOMAIN + b"/derive" + self.to_bytes() + label.encode()).digest()
        return Seed(int.from_bytes(digest, "little"))


def as_seed(seed) -> Seed:
    if isinstance(seed, Seed):
        return seed
    return Seed(int(seed))


class Stream:
    """Sequential reader over one labelled counter-mode stream."""

    def __init__(self, seed, label: str = ""):
        self.seed = as_seed(seed)
        self.label = label
        self._key = hashlib.sha256(_DOMAIN + self.seed.to_bytes() + label.encode()).digest()
        self._counter = 0
        self._buffer = b""

    def read_bytes(self, count: int) -> bytes:
        need = count - len(self._buffer)
        if need > 0:
            nblocks = -(-need // 32)
            key = self._key
            start = self._counter
            chunks = [
                hashlib.sha256(key + (j).to_bytes(8, "little")).digest()
                for j in range(start, start + nblocks)
            ]
            self._counter += nblocks
            self._buffer += b"".join(chunks)
        out, self._buffer = self._buffer[:count], self._buffer[count:]
        return out

    def bits(self, n: int) -> np.ndarray:
        """``n`` bits as a uint8 array of 0/1."""
        raw = np.frombuffer(self.read_bytes(-(-n // 8)), dtype=np.uint8)
        return np.unpackbits(raw)[:n]

    def words(self, n: int) -> np.ndarray:
        raw = self.read_bytes(8 * n)
        return np.frombuffer(raw, dtype="<u8").astype(np.uint64)

    def uniform(self, n: int) -> np.ndarray:
        return (self.words(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def integers(self, m: int, n: int) -> np.ndarray:
        """``n`` integers uniform on ``[0, m)``."""
        return (self.words(n) % np.uint64(m)).astype(np.int64)

    def bernoulli(self, p: float, n: int) -> np.ndarray:
        return (self.uniform(n) < p).astype(np.uint8)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle driven by the stream."""
        perm = np.arange(n)
        draws = self.words(max(n - 1, 0))
        for i in range(n - 1, 0, -1):
            j = int(draws[n - 1 - i] % np.uint64(i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm
