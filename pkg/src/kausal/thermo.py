"""A reversible tape machine with the work-extraction bounds built on it.

Gates act on a fixed-width tape: ``NOT(i)``, ``CNOT(c, t)`` and
``TOFFOLI(c1, c2, t)``.  All three are involutions, so a program is undone
by replaying it backwards.  On top of the machine sit fuel-value bounds,
Bennett's copy-XOR-uncompute extraction, a structure function over a fixed
model registry, the second-law audit and the Landauer ledger.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence

import numba
import numpy as np

from . import codec
from .bits import BitString, _atomic_write, concat
from .complexity import default_compressor, estimate_K, estimate_K_cond, log2_binom
from .errors import GateIndexOutOfRange, GeneratorMismatch, MalformedFile, NoCoveringModel
from .rng import Stream, as_seed

BOLTZMANN = 1.380649e-23  # J/K
DEFAULT_T = 300.0

OP_NOT, OP_CNOT, OP_TOFFOLI = 0, 1, 2
_ARITY = {OP_NOT: 1, OP_CNOT: 2, OP_TOFFOLI: 3}
_NAMES = {"NOT": OP_NOT, "CNOT": OP_CNOT, "TOFFOLI": OP_TOFFOLI}


def NOT(i):
    return (OP_NOT, i, -1, -1)


def CNOT(c, t):
    return (OP_CNOT, c, t, -1)


def TOFFOLI(c1, c2, t):
    return (OP_TOFFOLI, c1, c2, t)


def as_program(gates) -> np.ndarray:
    """Gate tuples or a ``(G, 4)`` array, normalized to int64."""
    if isinstance(gates, np.ndarray):
        prog = gates.astype(np.int64).reshape(-1, 4)
    else:
        rows = []
        for g in gates:
            op = _NAMES[g[0].upper()] if isinstance(g[0], str) else int(g[0])
            args = [int(v) for v in g[1:]]
            if op not in _ARITY or len([a for a in args if a >= 0]) != _ARITY[op]:
                raise ValueError(f"malformed gate {g!r}")
            rows.append([op] + args + [-1] * (3 - len(args)))
        prog = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return np.ascontiguousarray(prog)


def _check_indices(prog: np.ndarray, width: int):
    for row in prog:
        used = row[1:1 + _ARITY[int(row[0])]]
        if np.any(used < 0) or np.any(used >= width):
            raise GateIndexOutOfRange(f"gate {row.tolist()} touches a bit outside tape width {width}")
        if len(set(used.tolist())) != len(used):
            raise ValueError(f"gate {row.tolist()} repeats a bit index")


def shift_program(prog, offset: int) -> np.ndarray:
    out = as_program(prog).copy()
    mask = out[:, 1:] >= 0
    out[:, 1:][mask] += offset
    return out


def random_program(width: int, gates: int, seed, label: str = "program") -> np.ndarray:
    """Seeded mix of NOT / CNOT / TOFFOLI gates on distinct bits."""
    if width < 3:
        raise ValueError("random programs need width >= 3")
    st = Stream(seed, label)
    ops = st.integers(3, gates)
    # three distinct bits: draw from shrinking ranges and skip taken values
    i = st.integers(width, gates)
    j = st.integers(width - 1, gates)
    j = j + (j >= i)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    k = st.integers(width - 2, gates)
    k = k + (k >= lo)
    k = k + (k >= hi)
    prog = np.full((gates, 4), -1, dtype=np.int64)
    prog[:, 0] = ops
    prog[:, 1] = i
    prog[:, 2] = np.where(ops >= OP_CNOT, j, -1)
    prog[:, 3] = np.where(ops == OP_TOFFOLI, k, -1)
    return prog


@numba.njit(cache=True)
def _apply(tape, prog, start, stop, step):
    g = start
    while g != stop:
        op = prog[g, 0]
        if op == 0:
            tape[prog[g, 1]] ^= 1
        elif op == 1:
            tape[prog[g, 2]] ^= tape[prog[g, 1]]
        else:
            tape[prog[g, 3]] ^= tape[prog[g, 1]] & tape[prog[g, 2]]
        g += step


@dataclass
class Trace:
    """Tape snapshots of a run; ``steps[i]`` gates had been applied at ``tapes[i]``."""

    steps: np.ndarray
    tapes: np.ndarray  # (m, width) uint8

    def __len__(self):
        return int(self.steps.size)

    def tape(self, i) -> BitString:
        return BitString._wrap(self.tapes[i])

    @classmethod
    def from_tapes(cls, tapes: Sequence[BitString], steps=None) -> "Trace":
        arr = np.stack([t.array for t in tapes]).astype(np.uint8)
        steps = np.arange(len(tapes)) if steps is None else np.asarray(steps, dtype=np.int64)
        return cls(steps, arr)

    def write(self, path) -> None:
        """One line per snapshot: ``<step> <ascii01 tape>``."""
        lines = [f"{int(s)} {BitString._wrap(t)}" for s, t in zip(self.steps, self.tapes)]
        _atomic_write(Path(path), ("\n".join(lines) + "\n").encode("ascii"))

    @classmethod
    def read(cls, path) -> "Trace":
        steps, tapes = [], []
        for no, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
            try:
                step, bits = line.split(" ")
                steps.append(int(step))
                tapes.append(BitString(bits))
            except ValueError:
                raise MalformedFile(f"{path}:{no}: expected '<step> <bits>'") from None
        if len({len(t) for t in tapes}) > 1:
            raise MalformedFile(f"{path}: snapshots have different widths")
        return cls.from_tapes(tapes, steps)


class ReversibleMachine:
    """A tape plus a gate program, run forward or backward."""

    def __init__(self, tape: BitString, program):
        self.program = as_program(program)
        self._tape = np.array(tape.array, dtype=np.uint8)
        _check_indices(self.program, self._tape.size)
        self.pc = 0
        self.history: List[int] = []

    @property
    def tape(self) -> BitString:
        return BitString(self._tape.copy())

    @property
    def width(self) -> int:
        return int(self._tape.size)

    def step(self) -> None:
        if self.pc >= len(self.program):
            raise IndexError("program already finished")
        _apply(self._tape, self.program, self.pc, self.pc + 1, 1)
        self.history.append(self.pc)
        self.pc += 1

    def run(self, snapshot_every: Optional[int] = None) -> Trace:
        """Run to the end; snapshot every ``snapshot_every`` gates (ends always kept)."""
        total = len(self.program)
        stride = snapshot_every or max(total - self.pc, 1)
        steps, tapes = [self.pc], [self._tape.copy()]
        while self.pc < total:
            stop = min(self.pc + stride, total)
            _apply(self._tape, self.program, self.pc, stop, 1)
            self.history.extend(range(self.pc, stop))
            self.pc = stop
            steps.append(self.pc)
            tapes.append(self._tape.copy())
        return Trace(np.array(steps, dtype=np.int64), np.stack(tapes))

    def invert(self) -> BitString:
        """Undo every applied gate, newest first, and return the restored tape."""
        if self.pc:
            _apply(self._tape, self.program, self.pc - 1, -1, -1)
        self.pc = 0
        self.history.clear()
        return self.tape


def run_program(tape: BitString, program) -> BitString:
    m = ReversibleMachine(tape, program)
    m.run()
    return m.tape


# -- exhaustive reversibility ----------------------------------------------

def _apply_ints(vals: np.ndarray, prog: np.ndarray, reverse: bool) -> np.ndarray:
    one = np.uint64(1)
    rows = prog[::-1] if reverse else prog
    for op, i, j, k in rows:
        if op == OP_NOT:
            vals ^= one << np.uint64(i)
        elif op == OP_CNOT:
            vals ^= ((vals >> np.uint64(i)) & one) << np.uint64(j)
        else:
            vals ^= ((vals >> np.uint64(i)) & (vals >> np.uint64(j)) & one) << np.uint64(k)
    return vals


def exhaustive_reversibility(program, width: int) -> dict:
    """Run then invert ``program`` on all ``2**width`` tapes at once.

    Tape bit ``i`` is integer bit ``i``.  Reports whether every tape came
    back and whether the forward map is a bijection.
    """
    if width > 24:
        raise ValueError("exhaustive check is limited to width <= 24")
    prog = as_program(program)
    _check_indices(prog, width)
    start = np.arange(1 << width, dtype=np.uint64)
    forward = _apply_ints(start.copy(), prog, False)
    back = _apply_ints(forward.copy(), prog, True)
    return {
        "restored": bool(np.array_equal(back, start)),
        "bijective": bool(np.unique(forward).size == start.size),
        "tapes": int(start.size),
    }


# -- fuel value -------------------------------------------------------------

def work_per_bit(T: float = DEFAULT_T) -> float:
    """kT ln 2 in joules."""
    return BOLTZMANN * T * math.log(2)


@dataclass(frozen=True)
class FuelReport:
    len_S: int
    lower_bound_bits: int
    upper_bound_bits: int
    extracted_zeros: Optional[int] = None
    T: float = DEFAULT_T

    @property
    def work_per_bit(self) -> float:
        return work_per_bit(self.T)

    def to_dict(self) -> dict:
        w = self.work_per_bit
        return {
            "len_S": self.len_S,
            "lower_bound_bits": self.lower_bound_bits,
            "upper_bound_bits": self.upper_bound_bits,
            "extracted_zeros": self.extracted_zeros,
            "T_kelvin": self.T,
            "work_per_bit_joules": w,
            "lower_bound_joules": self.lower_bound_bits * w,
            "upper_bound_joules": self.upper_bound_bits * w,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def fuel_bounds(S: BitString, X: Optional[BitString] = None, c=None, T: float = DEFAULT_T,
                extracted_zeros: Optional[int] = None) -> FuelReport:
    """Bounds on the zeros extractable from ``S`` by a device that knows ``X``.

    The lower bound is constructive: the decodable container for ``(X, S)``
    costs this many bits more than the one for ``X`` alone, so a compressor
    with helper frees the rest of ``S``.  The upper bound subtracts the
    conditional estimate K(S | X).
    """
    n = len(S)
    if n < 1:
        raise ValueError("S must be nonempty")
    helper = [X] if X is not None and len(X) else []
    code = codec.container_bits(helper + [S]) - codec.container_bits(helper) if helper else codec.container_bits([S])
    lower = min(max(n - code, 0), n)
    upper = min(max(n - int(estimate_K_cond(S, X if helper else None, c).value_bits), 0), n)
    return FuelReport(n, int(lower), int(upper), extracted_zeros, T)


@dataclass
class BennettResult:
    initial_tape: BitString
    final_tape: BitString
    extracted_zeros: int
    transcript: np.ndarray  # the whole reversible program that was run
    layout: dict


def copy_generator(len_x: int, len_s: int) -> np.ndarray:
    """Generator that copies the first ``len_s`` bits of X into the copy region."""
    if len_s > len_x:
        raise ValueError("X is shorter than S")
    return as_program([CNOT(i, len_x + i) for i in range(len_s)])


def bennett_extract(S: BitString, X: BitString, generator, scratch: int = 0) -> BennettResult:
    """Turn ``S`` into zeros using a reversible generator of ``S`` from ``X``.

    Tape layout: ``[S | X | copy | scratch]``.  ``generator`` addresses
    ``[X | copy | scratch]`` starting at 0.  Steps: run the generator,
    XOR the copy into ``S``, run the generator backwards.  If the copy
    differs from ``S`` the generator is undone and ``GeneratorMismatch`` is
    raised with the restored tape attached as ``.tape``.
    """
    n, nx = len(S), len(X)
    width = n + nx + n + scratch
    initial = concat(S, X, BitString.zeros(n + scratch))
    gen = shift_program(generator, n)
    _check_indices(gen, width)
    tape = np.array(initial.array, dtype=np.uint8)
    _apply(tape, gen, 0, len(gen), 1)
    copy = tape[n + nx: n + nx + n]
    if not np.array_equal(copy, S.array):
        if len(gen):
            _apply(tape, gen, len(gen) - 1, -1, -1)
        err = GeneratorMismatch(f"generator produced a different string at {int(np.sum(copy != S.array))} positions")
        err.tape = BitString(tape)
        raise err
    xor = as_program([CNOT(n + nx + i, i) for i in range(n)]) if n else np.zeros((0, 4), np.int64)
    _apply(tape, xor, 0, len(xor), 1)
    if len(gen):
        _apply(tape, gen, len(gen) - 1, -1, -1)
    transcript = np.concatenate([gen, xor, gen[::-1]]) if len(gen) else xor
    final = BitString(tape)
    zeros = int(n - final[:n].count()) if n else 0
    layout = {"S": [0, n], "X": [n, n + nx], "copy": [n + nx, 2 * n + nx], "scratch": [2 * n + nx, width]}
    return BennettResult(initial, final, zeros, transcript, layout)


# -- structure function -----------------------------------------------------

TAG_BITS = 3


def gamma_bits(v: int) -> int:
    """Length of the Elias gamma code of ``v >= 1``."""
    return 2 * (int(v).bit_length() - 1) + 1


@dataclass(frozen=True)
class Model:
    """A described finite set of strings of length ``n``."""

    family: str
    params: tuple
    cost_bits: float
    log_size: float
    member: Callable = field(compare=False, repr=False)

    def contains(self, s: BitString) -> bool:
        return bool(self.member(s))

    def to_dict(self):
        return {"family": self.family, "params": list(self.params), "cost_bits": round(self.cost_bits, 4),
                "log_size": round(self.log_size, 4)}


def _runs(arr: np.ndarray) -> int:
    return int(1 + np.count_nonzero(arr[1:] != arr[:-1])) if arr.size else 0


def family_cube(S):
    n = len(S)
    yield Model("cube", (n,), TAG_BITS + gamma_bits(n), float(n), lambda s: len(s) == n)


def family_constant(S):
    n, arr = len(S), S.array
    if n and np.all(arr == arr[0]):
        v = int(arr[0])
        yield Model("constant", (n, v), TAG_BITS + gamma_bits(n) + 1, 0.0,
                    lambda s: len(s) == n and bool(np.all(s.array == v)))


def family_hamming(S):
    n, w = len(S), S.count()
    yield Model("hamming_shell", (n, w), TAG_BITS + gamma_bits(n) + math.ceil(math.log2(n + 1)),
                log2_binom(n, w), lambda s: len(s) == n and s.count() == w)


def family_runs(S):
    n = len(S)
    if n < 2:
        return
    r, first = _runs(S.array), int(S.array[0])
    yield Model("run_count", (n, first, r), TAG_BITS + gamma_bits(n) + 1 + math.ceil(math.log2(n)),
                log2_binom(n - 1, r - 1),
                lambda s: len(s) == n and int(s.array[0]) == first and _runs(s.array) == r)


def family_block_cylinders(S):
    """Aligned dyadic blocks; every constant block is fixed to its value."""
    n, arr = len(S), S.array
    level = 1
    while (1 << level) <= n // 2 + 1 and level <= 20:
        size = -(-n // (1 << level))
        starts = np.arange(0, n, size)
        fixed = []
        for a in starts:
            blk = arr[a:a + size]
            if np.all(blk == blk[0]):
                fixed.append((int(a), int(min(size, n - a)), int(blk[0])))
        if fixed:
            nfixed = sum(f[1] for f in fixed)
            cost = TAG_BITS + gamma_bits(n) + gamma_bits(level) + len(starts) + len(fixed)
            frozen = tuple(fixed)

            def member(s, frozen=frozen):
                return len(s) == n and all(np.all(s.array[a:a + m] == v) for a, m, v in frozen)

            yield Model("block_cylinder", (n, level, frozen), cost, float(n - nfixed), member)
        level += 1


def family_prefix_cylinders(S):
    """Cylinders fixing the first ``j`` bits to their values (``j = n`` is the singleton)."""
    n, arr = len(S), S.array
    grid = range(1, n + 1) if n <= 256 else sorted(set(np.linspace(1, n, 64).astype(int).tolist()))
    for j in grid:
        head = arr[:j].copy()
        yield Model("prefix_cylinder", (n, j), TAG_BITS + gamma_bits(n) + gamma_bits(j) + j, float(n - j),
                    lambda s, head=head, j=j: len(s) == n and bool(np.array_equal(s.array[:j], head)))


DEFAULT_REGISTRY = (family_cube, family_constant, family_hamming, family_runs,
                    family_block_cylinders, family_prefix_cylinders)


@dataclass
class StructureFunction:
    points: list  # (k, log_size, model) breakpoints, k increasing, log_size decreasing
    k0: float
    macrostate: Model
    n: int
    tol: float = 0.1

    @property
    def log_size(self) -> float:
        return self.macrostate.log_size

    def fuel_upper_bound(self) -> float:
        """N - cost(M) - log|M|."""
        return self.n - self.macrostate.cost_bits - self.macrostate.log_size

    def at(self, k: float) -> float:
        """log2 |M_k| for budget ``k`` (``inf`` below the cheapest model)."""
        best = float("inf")
        for kk, ls, _ in self.points:
            if kk <= k:
                best = ls
        return best

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "points": [{"k": round(k, 4), "log_size": round(ls, 4), "model": m.to_dict()} for k, ls, m in self.points],
            "k0": round(self.k0, 4),
            "macrostate": self.macrostate.to_dict(),
            "fuel_upper_bound_bits": round(self.fuel_upper_bound(), 4),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def structure_function(S: BitString, registry: Iterable = DEFAULT_REGISTRY, tol: float = 0.1) -> StructureFunction:
    """Restricted structure function of ``S`` over a described model family.

    For each budget ``k`` the smallest registry model containing ``S`` with
    cost at most ``k`` is taken.  ``k0`` is the first breakpoint after
    which every segment of the staircase has slope at least ``-1 - tol``.
    """
    registry = tuple(registry)
    if not registry:
        raise NoCoveringModel("empty model registry")
    models = [m for fam in registry for m in fam(S) if m.contains(S)]
    if not models:
        raise NoCoveringModel(f"no registry model contains the given string of length {len(S)}")
    models.sort(key=lambda m: (m.cost_bits, m.log_size))
    points = []
    for m in models:
        if not points or m.log_size < points[-1][1] - 1e-9:
            points.append((float(m.cost_bits), float(m.log_size), m))
    chosen = len(points) - 1
    for b in range(len(points)):
        kb, lb, _ = points[b]
        if all((l2 - lb) / (k2 - kb) >= -1.0 - tol for k2, l2, _ in points[b + 1:]):
            chosen = b
            break
    k0, _, macro = points[chosen]
    return StructureFunction(points, k0, macro, len(S), tol)


# -- second law -------------------------------------------------------------

@dataclass(frozen=True)
class AuditReport:
    violations: int
    pairs: int
    worst_margin: float  # max over pairs of K(t1) - K(t2) - slope*log2(dt) - slack; <= 0 means none
    worst_pair: Optional[tuple]
    slope: float
    slack: float
    complexities: tuple

    def to_dict(self):
        return {"violations": self.violations, "pairs": self.pairs, "worst_margin": round(self.worst_margin, 4),
                "worst_pair": list(self.worst_pair) if self.worst_pair else None, "slope": self.slope,
                "slack": self.slack}


def second_law_audit(trace, c=None, slope: float = 8.0, slack: float = 128.0) -> AuditReport:
    """Check K(tape_t1) <= K(tape_t2) + slope*log2(t2 - t1) + slack for all t1 < t2."""
    if not isinstance(trace, Trace):
        trace = Trace.from_tapes(list(trace))
    c = c or default_compressor()
    k = np.array([estimate_K(trace.tape(i), c).value_bits for i in range(len(trace))], dtype=float)
    steps = trace.steps.astype(float)
    m = len(trace)
    if m < 2:
        return AuditReport(0, 0, -slack, None, slope, slack, tuple(k.tolist()))
    i1, i2 = np.triu_indices(m, 1)
    dt = np.maximum(steps[i2] - steps[i1], 1.0)
    excess = k[i1] - k[i2] - slope * np.log2(dt) - slack
    worst = int(np.argmax(excess))
    return AuditReport(int(np.sum(excess > 0)), int(excess.size), float(excess[worst]),
                       (int(trace.steps[i1[worst]]), int(trace.steps[i2[worst]])), slope, slack,
                       tuple(k.tolist()))


# -- Landauer ---------------------------------------------------------------

@dataclass(frozen=True)
class LandauerEntry:
    bits: float
    joules: float
    T: float

    def to_dict(self):
        return {"bits": self.bits, "joules": self.joules, "T_kelvin": self.T}


def landauer_ledger(A: BitString, B: BitString, c=None, T: float = DEFAULT_T) -> LandauerEntry:
    """(K(A) - K(B)) kT ln 2: positive is the least free energy the change A -> B costs,
    negative is the most it can release."""
    bits = float(estimate_K(A, c).value_bits - estimate_K(B, c).value_bits)
    return LandauerEntry(bits, bits * work_per_bit(T), T)


# -- mixing demo ------------------------------------------------------------

def swap_program(pairs: np.ndarray) -> np.ndarray:
    """Adjacent swaps as CNOT triples."""
    prog = np.full((3 * len(pairs), 4), -1, dtype=np.int64)
    prog[:, 0] = OP_CNOT
    i, j = pairs[:, 0], pairs[:, 1]
    prog[0::3, 1], prog[0::3, 2] = i, j
    prog[1::3, 1], prog[1::3, 2] = j, i
    prog[2::3, 1], prog[2::3, 2] = i, j
    return prog


def mixing_demo(n: int = 256, swaps: int = 200_000, snapshots: int = 8, seed=0) -> dict:
    """Two species (0 left, 1 right) mixed by seeded adjacent swaps.

    Returns the macrostate of each snapshot under the default registry.
    """
    seed = as_seed(seed)
    left = Stream(seed, "mixing/pairs").integers(n - 1, swaps)
    pairs = np.stack([left, left + 1], axis=1)
    tape = concat(BitString.zeros(n // 2), BitString.ones(n - n // 2))
    machine = ReversibleMachine(tape, swap_program(pairs))
    trace = machine.run(snapshot_every=max(1, 3 * swaps // snapshots))
    frames = []
    for t in range(len(trace)):
        sf = structure_function(trace.tape(t))
        frames.append({"step": int(trace.steps[t]), "macrostate": sf.macrostate.family,
                       "log_size": round(sf.log_size, 4), "k0": round(sf.k0, 4)})
    return {"n": n, "swaps": swaps, "frames": frames, "trace": trace}
