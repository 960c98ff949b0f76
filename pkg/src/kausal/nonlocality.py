"""Two-party input/output boxes described only by their factual strings.

A ``Quadruple`` holds the inputs ``a, b`` and outputs ``x, y`` of one run
of a box.  There are generators for the PR box (``x ^ y == a & b``
position-wise) as well as for chained-Bell and magic-square games.  The tests
decide static no-signaling and locality with the complexity proxy, and
the ``*_value`` functions are exact exhaustive oracles.
"""

from __future__ import annotations

import itertools
import math
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .bits import BitString, SymbolString, _atomic_write, sample_incompressible
from .complexity import Thresholds, Verdict, _require_length, estimate_K_cond, judge, log2_binom
from .errors import BadBlockAlignment, LengthMismatch, MalformedFile, TooLarge
from .rng import Stream, as_seed

PR = "PR"
CHAINED = "chained"
MAGIC_SQUARE = "magic_square"

Str = Union[BitString, SymbolString]


@dataclass(frozen=True)
class HiddenVariable:
    """Shared string λ handed to both parties before the run."""

    lam: BitString

    def __len__(self):
        return len(self.lam)


@dataclass(frozen=True)
class Quadruple:
    a: Str
    b: Str
    x: Str
    y: Str
    kind: str = PR
    m: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)
    hidden: Optional[HiddenVariable] = field(default=None, compare=False)

    def __post_init__(self):
        n = len(self.a)
        if not len(self.b) == len(self.x) == len(self.y) == n:
            raise LengthMismatch("quadruple strings must have equal lengths")
        if self.kind == PR:
            if not all(isinstance(s, BitString) for s in (self.a, self.b, self.x, self.y)):
                raise TypeError("PR quadruples hold bit strings")
        elif self.kind == CHAINED:
            if not (isinstance(self.a, SymbolString) and isinstance(self.b, SymbolString)):
                raise TypeError("chained inputs are symbol strings")
            if self.a.m != self.m or self.b.m != self.m:
                raise ValueError("chained input alphabet must be 1..m")
            step = (self.b.array - self.a.array) % self.m
            if np.any(step > 1):
                raise ValueError("chained promise violated: b must equal a or a+1 (mod m)")
        elif self.kind == MAGIC_SQUARE:
            if any(not isinstance(s, SymbolString) for s in (self.a, self.b, self.x, self.y)):
                raise TypeError("magic-square quadruples hold symbol strings")
            if self.a.m != 3 or self.b.m != 3 or self.x.m != 4 or self.y.m != 4:
                raise ValueError("magic-square alphabets are 1..3 (inputs) and 1..4 (outputs)")
        else:
            raise ValueError(f"unknown system kind {self.kind!r}")

    def __len__(self):
        return len(self.a)


# -- local strategies -------------------------------------------------------

def _blocks(bits: np.ndarray, width: int) -> np.ndarray:
    if width == 0:
        return np.zeros(bits.size, dtype=np.int64)
    weights = 1 << np.arange(width - 1, -1, -1)
    return bits.reshape(-1, width).astype(np.int64) @ weights


def _unblocks(values: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


@dataclass(frozen=True)
class LocalStrategy:
    """Deterministic local programs ``x = f(a, λ)`` and ``y = g(b, λ)``.

    Each round consumes ``block_len`` input bits and ``lam_len`` bits of
    λ.  ``f`` and ``g`` are lookup tables indexed by
    ``(input_block << lam_len) | lam_block`` whose entries are output
    blocks of ``block_len`` bits.
    """

    f: tuple
    g: tuple
    block_len: int = 1
    lam_len: int = 0
    name: str = "custom"

    def __post_init__(self):
        size = 1 << (self.block_len + self.lam_len)
        for table in (self.f, self.g):
            if len(table) != size:
                raise ValueError(f"lookup tables need {size} entries")
            if any(not 0 <= int(v) < 1 << self.block_len for v in table):
                raise ValueError("table entries must be output blocks")

    def outputs(self, a: BitString, b: BitString, lam: Optional[BitString]):
        n = len(a)
        if n % self.block_len:
            raise BadBlockAlignment(f"length {n} is not a multiple of block_len={self.block_len}")
        rounds = n // self.block_len
        if self.lam_len:
            if lam is None or len(lam) != rounds * self.lam_len:
                raise BadBlockAlignment(f"λ must hold {rounds * self.lam_len} bits")
            lb = _blocks(lam.array, self.lam_len)
        else:
            lb = np.zeros(rounds, dtype=np.int64)
        ia = (_blocks(a.array, self.block_len) << self.lam_len) | lb
        ib = (_blocks(b.array, self.block_len) << self.lam_len) | lb
        f, g = np.asarray(self.f, dtype=np.int64), np.asarray(self.g, dtype=np.int64)
        x = BitString._wrap(_unblocks(f[ia], self.block_len))
        y = BitString._wrap(_unblocks(g[ib], self.block_len))
        return x, y

    # bundled single-bit strategies; index = (input << 1) | λ
    @classmethod
    def constant(cls):
        return cls((0, 0), (0, 0), 1, 0, "constant")

    @classmethod
    def copy_input(cls):
        return cls((0, 1), (0, 0), 1, 0, "copy_input")

    @classmethod
    def shared(cls):
        return cls((0, 1, 0, 1), (0, 1, 0, 1), 1, 1, "shared")

    @classmethod
    def input_xor_shared(cls):
        return cls((0, 1, 1, 0), (0, 1, 0, 1), 1, 1, "input_xor_shared")


def bundled_strategies() -> list:
    return [LocalStrategy.constant(), LocalStrategy.copy_input(),
            LocalStrategy.shared(), LocalStrategy.input_xor_shared()]


@dataclass(frozen=True)
class Biased:
    """PR box whose ``x`` has bias ``p`` toward 1."""

    p: float


# -- generators -------------------------------------------------------------

def _inputs(n, seed, a, b):
    seed = as_seed(seed)
    a = a if a is not None else sample_incompressible(n, seed.derive("pr/a"))
    b = b if b is not None else sample_incompressible(n, seed.derive("pr/b"))
    return a, b


def _strategy_name(strategy) -> str:
    if isinstance(strategy, LocalStrategy):
        return f"local:{strategy.name}"
    if isinstance(strategy, Biased):
        return f"biased:{strategy.p}"
    return str(strategy)


def gen_pr(n: int, seed, strategy="nonlocal_unbiased", a: BitString = None, b: BitString = None,
           lam: BitString = None) -> Quadruple:
    """PR-box run of length ``n``.

    Inputs default to gated-incompressible draws.  For local strategies a
    missing λ is drawn from the seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = as_seed(seed)
    a, b = _inputs(n, seed, a, b)
    meta = {"seed": seed.value, "strategy": _strategy_name(strategy)}
    if isinstance(strategy, LocalStrategy):
        if n % strategy.block_len:
            raise BadBlockAlignment(f"length {n} is not a multiple of block_len={strategy.block_len}")
        hidden = None
        if strategy.lam_len:
            if lam is None:
                lam = BitString(Stream(seed, "pr/lambda").bits(n // strategy.block_len * strategy.lam_len))
            hidden = HiddenVariable(lam)
        x, y = strategy.outputs(a, b, lam)
        return Quadruple(a, b, x, y, PR, None, meta, hidden)
    ab = a.array & b.array
    if strategy == "nonlocal_unbiased":
        x = Stream(seed, "pr/x").bits(n)
    elif isinstance(strategy, Biased):
        x = Stream(seed, "pr/x").bernoulli(strategy.p, n)
    else:
        raise ValueError(f"unknown PR strategy {strategy!r}")
    return Quadruple(a, b, BitString._wrap(x), BitString._wrap(x ^ ab), PR, None, meta)


def chained_indicator(a: SymbolString, b: SymbolString) -> BitString:
    """χ_i = 1 exactly where a_i = m and b_i = 1."""
    if len(a) != len(b):
        raise LengthMismatch("inputs must have equal length")
    return BitString._wrap(((a.array == a.m) & (b.array == 1)).astype(np.uint8))


def gen_chained(n: int, m: int, seed, error_rate: Optional[float] = None) -> Quadruple:
    """Chained-Bell run; ``error_rate`` defaults to ``1/m**2``."""
    if m < 3:
        raise ValueError("chained systems need m >= 3")
    if error_rate is None:
        error_rate = 1.0 / m ** 2
    if not 0 <= error_rate < 1:
        raise ValueError("error_rate must lie in [0, 1)")
    seed = as_seed(seed)
    a = Stream(seed, "chained/a").integers(m, n)
    step = Stream(seed, "chained/step").integers(2, n)
    b = (a + step) % m
    A, B = SymbolString(a + 1, m), SymbolString(b + 1, m)
    chi = chained_indicator(A, B).array
    x = Stream(seed, "chained/x").bits(n)
    flips = Stream(seed, "chained/errors").bernoulli(error_rate, n)
    y = x ^ chi ^ flips
    meta = {"seed": seed.value, "strategy": f"error_rate:{error_rate}"}
    return Quadruple(A, B, BitString._wrap(x), BitString._wrap(y), CHAINED, m, meta)


def chained_chi_given_b(q: Quadruple, c=None):
    """Masked-conditional estimate of K(χ | b): only positions with b_i = 1 can carry χ_i = 1."""
    chi = chained_indicator(q.a, q.b)
    return estimate_K_cond(chi, q.b, c=c, mask=q.b.array == 1)


# -- magic square -----------------------------------------------------------
# Output symbol s in 1..4 encodes two free bits (s - 1 = 2*bit0 + bit1).
# Alice's third row bit makes the row parity even, Bob's third column bit
# makes the column parity odd.

def _row_bits(sym: np.ndarray) -> np.ndarray:
    v = sym - 1
    b0, b1 = (v >> 1) & 1, v & 1
    return np.stack([b0, b1, b0 ^ b1], axis=-1)


def _col_bits(sym: np.ndarray) -> np.ndarray:
    v = sym - 1
    b0, b1 = (v >> 1) & 1, v & 1
    return np.stack([b0, b1, b0 ^ b1 ^ 1], axis=-1)


def _magic_wins(a, b, x, y) -> np.ndarray:
    rows, cols = _row_bits(np.asarray(x)), _col_bits(np.asarray(y))
    idx = np.arange(len(a))
    return rows[idx, np.asarray(b) - 1] == cols[idx, np.asarray(a) - 1]


def _best_magic_tables():
    best, arg = -1, None
    syms = np.arange(1, 5)
    r, cidx = np.meshgrid(np.arange(3), np.arange(3), indexing="ij")
    for ftab in itertools.product(syms, repeat=3):
        for gtab in itertools.product(syms, repeat=3):
            wins = int(_magic_wins((r + 1).ravel(), (cidx + 1).ravel(),
                                   np.array(ftab)[r.ravel()], np.array(gtab)[cidx.ravel()]).sum())
            if wins > best:
                best, arg = wins, (ftab, gtab)
    return best, arg


def magic_square_value() -> Fraction:
    """Exact classical winning probability under uniform inputs."""
    best, _ = _best_magic_tables()
    return Fraction(best, 9)


def gen_magic_square(n: int, seed, strategy: str = "consistent") -> Quadruple:
    """Magic-square run.

    ``consistent`` samples per round an answer pair that always wins;
    ``deterministic`` replays an optimal deterministic table pair.
    """
    seed = as_seed(seed)
    a = Stream(seed, "magic/a").integers(3, n) + 1
    b = Stream(seed, "magic/b").integers(3, n) + 1
    if strategy == "consistent":
        x = Stream(seed, "magic/x").integers(4, n) + 1
        need = _row_bits(x)[np.arange(n), b - 1]
        coin = Stream(seed, "magic/y").bits(n)
        y = np.zeros(n, dtype=np.int64)
        cand = np.arange(1, 5)
        ok = _col_bits(cand)  # (4, 3)
        for col in range(3):
            for v in (0, 1):
                allowed = cand[ok[:, col] == v]
                sel = (a - 1 == col) & (need == v)
                y[sel] = allowed[coin[sel]]
    elif strategy == "deterministic":
        _, (ftab, gtab) = _best_magic_tables()
        x = np.array(ftab)[a - 1]
        y = np.array(gtab)[b - 1]
    else:
        raise ValueError(f"unknown magic-square strategy {strategy!r}")
    meta = {"seed": seed.value, "strategy": strategy}
    return Quadruple(SymbolString(a, 3), SymbolString(b, 3), SymbolString(x, 4), SymbolString(y, 4),
                     MAGIC_SQUARE, None, meta)


# -- relation checks --------------------------------------------------------

@dataclass(frozen=True)
class RelationCheck:
    ok_count: int
    violation_positions: np.ndarray

    @property
    def violations(self) -> int:
        return int(self.violation_positions.size)

    def fraction(self) -> float:
        total = self.ok_count + self.violations
        return self.violations / total if total else 0.0

    def positions_bits(self) -> float:
        """Description length of the violation positions: the count, then the subset."""
        n = self.ok_count + self.violations
        return math.log2(n + 1) + log2_binom(n, self.violations)


def check_relation(q: Quadruple) -> RelationCheck:
    """Exact per-position check of the box's defining predicate."""
    if q.kind == PR:
        ok = (q.x.array ^ q.y.array) == (q.a.array & q.b.array)
    elif q.kind == CHAINED:
        ok = (q.x.array ^ q.y.array) == chained_indicator(q.a, q.b).array
    else:
        ok = _magic_wins(q.a.array, q.b.array, q.x.array, q.y.array)
    bad = np.flatnonzero(~ok)
    return RelationCheck(int(ok.sum()), bad)


# -- complexity tests -------------------------------------------------------

def test_no_signaling(q: Quadruple, th: Thresholds = None, c=None) -> Verdict:
    """Judge K(x|a) ~ K(x|a,b) and K(y|b) ~ K(y|a,b)."""
    th = th or Thresholds()
    _require_length(th, q.x)
    n = len(q)
    k = {
        "K_x_a": estimate_K_cond(q.x, q.a, c).value_bits,
        "K_x_ab": estimate_K_cond(q.x, (q.a, q.b), c).value_bits,
        "K_y_b": estimate_K_cond(q.y, q.b, c).value_bits,
        "K_y_ab": estimate_K_cond(q.y, (q.a, q.b), c).value_bits,
    }
    gap_x = abs(k["K_x_a"] - k["K_x_ab"]) / n
    gap_y = abs(k["K_y_b"] - k["K_y_ab"]) / n
    margin_x, margin_y = th.eps_dep - gap_x, th.eps_dep - gap_y
    details = dict(k, margin_x=margin_x, margin_y=margin_y,
                   failed=[s for s, mg in (("x", margin_x), ("y", margin_y)) if mg < 0])
    return Verdict(margin_x >= 0 and margin_y >= 0, min(margin_x, margin_y), "no_signaling", details)


test_no_signaling.__test__ = False


def _locality_conditions(q, lam, th, c):
    indep = judge("independent", ((q.a, q.b), lam), th, c)
    kx = estimate_K_cond(q.x, (q.a, lam), c)
    ky = estimate_K_cond(q.y, (q.b, lam), c)
    conds = {
        "independence": indep.passed is not False,
        "x_from_a_lambda": kx.ratio() <= th.eps_zero,
        "y_from_b_lambda": ky.ratio() <= th.eps_zero,
    }
    margins = [indep.margin, th.eps_zero - kx.ratio(), th.eps_zero - ky.ratio()]
    details = {"independence": indep.to_dict(), "K_x_given_a_lambda": kx.value_bits,
               "K_y_given_b_lambda": ky.value_bits, "conditions": conds}
    return all(conds.values()), min(margins), details


def test_locality(q: Quadruple, hidden: Optional[HiddenVariable] = None, th: Thresholds = None,
                  c=None) -> Verdict:
    """Locality certificate.

    With ``hidden`` the three conditions on that λ are judged.  Without it
    only the two sufficient conditions K(a,b)~0 and K(x,y)~0 are tried,
    each with the candidate λ = (x, y); when neither applies the verdict is
    indeterminate (``passed is None``), never a proof of non-locality.
    """
    th = th or Thresholds()
    _require_length(th, q.x)
    if hidden is not None:
        ok, margin, details = _locality_conditions(q, hidden.lam, th, c)
        details["certificate"] = "supplied"
        return Verdict(ok, margin, "locality", details)
    lam = (q.x, q.y)
    inputs_simple = judge("approx_zero", (q.a, q.b), th, c)
    outputs_simple = judge("approx_zero", (q.x, q.y), th, c)
    ok, margin, details = _locality_conditions(q, lam, th, c)
    details.update(inputs_simple=inputs_simple.to_dict(), outputs_simple=outputs_simple.to_dict())
    if inputs_simple.passed or outputs_simple.passed:
        details["certificate"] = "K(a,b)~0" if inputs_simple.passed else "K(x,y)~0"
        return Verdict(True, max(inputs_simple.margin, outputs_simple.margin), "locality", details)
    details["certificate"] = None
    details["reason"] = "no certificate found"
    return Verdict(None, margin, "locality", details)


test_locality.__test__ = False


# -- exhaustive oracles -----------------------------------------------------

def pr_strategy_value(f, g, r: int) -> int:
    """Number of input pairs ``(a, b)`` on ``r`` bits won by the tables ``f, g``."""
    ins = np.arange(1 << r)
    f, g = np.asarray(f), np.asarray(g)
    return int(((f[:, None] ^ g[None, :]) == (ins[:, None] & ins[None, :])).sum())


def pr_parallel_value(n_rounds: int) -> int:
    """Best deterministic score for ``n_rounds`` parallel PR games (max over all table pairs)."""
    r = int(n_rounds)
    if r < 1:
        raise ValueError("n_rounds must be >= 1")
    if r > 2:
        raise TooLarge("exhaustive search is limited to n_rounds <= 2")
    size = 1 << r
    tables = np.array(list(itertools.product(range(size), repeat=size)), dtype=np.int64)  # (T, size)
    target = np.arange(size)[:, None] & np.arange(size)[None, :]
    best = 0
    for f in tables:
        wins = ((f[None, :, None] ^ tables[:, None, :]) == target[None]).sum(axis=(1, 2))
        best = max(best, int(wins.max()))
    return best


# -- serialization ----------------------------------------------------------

def _line(s: Str) -> str:
    return str(s)


def write_quadruple(path, q: Quadruple) -> None:
    """JSON header line, then a, b, x, y one per line."""
    header = {"kind": q.kind, "m": q.m, "n": len(q), "seed": q.meta.get("seed"),
              "strategy": q.meta.get("strategy")}
    text = "\n".join([json.dumps(header, sort_keys=True)] + [_line(s) for s in (q.a, q.b, q.x, q.y)]) + "\n"
    _atomic_write(Path(path), text.encode("ascii"))


def _parse_bits(text: str) -> BitString:
    try:
        return BitString(text)
    except ValueError as exc:
        raise MalformedFile(str(exc)) from None


def _parse_symbols(text: str, m: int) -> SymbolString:
    try:
        return SymbolString([int(t) for t in text.split(" ")] if text else [], m)
    except ValueError as exc:
        raise MalformedFile(str(exc)) from None


def read_quadruple(path) -> Quadruple:
    lines = Path(path).read_text(encoding="ascii").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != 5:
        raise MalformedFile(f"{path}: expected a header and four string lines, found {len(lines)} lines")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: bad header: {exc}") from None
    kind, m = header.get("kind"), header.get("m")
    if kind == PR:
        a, b, x, y = (_parse_bits(t) for t in lines[1:])
    elif kind == CHAINED:
        a, b = (_parse_symbols(t, m) for t in lines[1:3])
        x, y = (_parse_bits(t) for t in lines[3:])
    elif kind == MAGIC_SQUARE:
        a, b = (_parse_symbols(t, 3) for t in lines[1:3])
        x, y = (_parse_symbols(t, 4) for t in lines[3:])
    else:
        raise MalformedFile(f"{path}: unknown kind {kind!r}")
    if header.get("n") != len(a):
        raise MalformedFile(f"{path}: header n={header.get('n')} but strings have length {len(a)}")
    meta = {"seed": header.get("seed"), "strategy": header.get("strategy")}
    try:
        return Quadruple(a, b, x, y, kind, m, meta)
    except (ValueError, TypeError) as exc:
        raise MalformedFile(f"{path}: {exc}") from None
