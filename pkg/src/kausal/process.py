"""Global relations between parties and their logical consistency without causal order.

Each of ``k`` parties holds an input string ``A_I``, an output string
``A_O`` and a control string ``P_C`` of two bits per round.  The control
pair picks the party's local map for that round::

    (0,0) -> const 0    (1,1) -> const 1    (0,1) -> identity    (1,0) -> negation

A ``GlobalRelation`` maps the k output bits of a round to the k input bits.
A round is realizable when some output vector is a fixed point of
"relation, then local maps".

Bit order: party ``p`` is bit ``k-1-p`` of a vector index, so party 0 is
the most significant bit and vector strings read left to right by party.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numba
import numpy as np

from .bits import BitString, _atomic_write, sample_incompressible
from .complexity import Thresholds, _require_length, estimate_K, estimate_K_cond
from .errors import InconsistentRelation, LengthMismatch, MalformedFile, TooManyParties
from .rng import Stream, as_seed

CONST0, CONST1, IDENTITY, NEGATION = 0, 1, 2, 3
OP_NAMES = ("const0", "const1", "id", "neg")
_PAIR_TO_OP = {(0, 0): CONST0, (1, 1): CONST1, (0, 1): IDENTITY, (1, 0): NEGATION}

MAX_PARTIES = 8
GUARD_BAND = 0.005

INCONSISTENT = "inconsistent"
CONSISTENT_CAUSAL = "consistent_causal"
CONSISTENT_NON_CAUSAL = "consistent_non_causal"
CLASSES = (INCONSISTENT, CONSISTENT_CAUSAL, CONSISTENT_NON_CAUSAL)


def _op_name(op) -> str:
    return OP_NAMES[int(op)]


def _op_code(op) -> int:
    if isinstance(op, str):
        try:
            return OP_NAMES.index(op)
        except ValueError:
            raise ValueError(f"unknown local operation {op!r}; use one of {OP_NAMES}") from None
    return int(op)


def _vec(index: int, k: int) -> str:
    return format(index, f"0{k}b")


# -- local operations -------------------------------------------------------

def control_ops(P_C: BitString) -> np.ndarray:
    """Per-round op codes from a control string of bit pairs."""
    if len(P_C) % 2:
        raise LengthMismatch("control strings hold two bits per round")
    pairs = P_C.array.reshape(-1, 2)
    c0, c1 = pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)
    return np.where(c0 == c1, c0, np.where(c1 == 1, IDENTITY, NEGATION))


def apply_ops(ops: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    inputs = inputs.astype(np.int64)
    out = np.where(ops == CONST0, 0, np.where(ops == CONST1, 1, np.where(ops == IDENTITY, inputs, 1 - inputs)))
    return out.astype(np.uint8)


def universal_local_op(P_C: BitString, P_I: BitString) -> BitString:
    """Outputs of the per-round local maps selected by ``P_C``."""
    if len(P_C) != 2 * len(P_I):
        raise LengthMismatch(f"control length {len(P_C)} must be twice the input length {len(P_I)}")
    return BitString._wrap(apply_ops(control_ops(P_C), P_I.array))


# -- global relations -------------------------------------------------------

@dataclass(frozen=True)
class GlobalRelation:
    """Truth table: ``table[o]`` is the input vector for output vector ``o``."""

    k: int
    table: tuple
    name: str = ""

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if len(self.table) != 1 << self.k:
            raise ValueError(f"a relation on {self.k} parties needs {1 << self.k} rows")
        if any(not 0 <= int(v) < 1 << self.k for v in self.table):
            raise ValueError("table entries must be k-bit vectors")

    @classmethod
    def from_function(cls, k: int, fn: Callable, name: str = "") -> "GlobalRelation":
        """Build from ``fn(outputs tuple) -> inputs tuple`` (party order)."""
        rows = []
        for o in range(1 << k):
            bits = tuple((o >> (k - 1 - p)) & 1 for p in range(k))
            ins = fn(*bits)
            rows.append(sum(int(b) << (k - 1 - p) for p, b in enumerate(ins)))
        return cls(k, tuple(rows), name)

    @classmethod
    def from_index(cls, k: int, index: int, name: str = "") -> "GlobalRelation":
        mask = (1 << k) - 1
        return cls(k, tuple((index >> (k * o)) & mask for o in range(1 << k)), name)

    @property
    def index(self) -> int:
        """Packed id: row ``o`` occupies bits ``k*o .. k*o+k-1``."""
        return sum(int(v) << (self.k * o) for o, v in enumerate(self.table))

    def inputs_for(self, outputs: np.ndarray) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int64)[outputs]

    def to_dict(self) -> dict:
        d = {"k": self.k, "rows": {_vec(o, self.k): _vec(v, self.k) for o, v in enumerate(self.table)}}
        if self.name:
            d["name"] = self.name
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            _atomic_write(Path(path), (text + "\n").encode())
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "GlobalRelation":
        try:
            k = int(d["k"])
            rows = d["rows"]
            table = [None] * (1 << k)
            for o, v in rows.items():
                if len(o) != k or len(v) != k:
                    raise ValueError(f"row {o!r} -> {v!r} is not a {k}-bit vector pair")
                table[int(o, 2)] = int(v, 2)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedFile(f"bad relation description: {exc}") from None
        if any(v is None for v in table):
            raise MalformedFile("relation table is not total")
        return cls(k, tuple(table), d.get("name", ""))

    @classmethod
    def load(cls, path) -> "GlobalRelation":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{path}: {exc}") from None
        return cls.from_dict(data)


def one_way_channel() -> GlobalRelation:
    """A's input is 0, B reads A's output."""
    return GlobalRelation.from_function(2, lambda x, y: (0, x), "one_way")


def two_way_channel() -> GlobalRelation:
    """Each party reads the other's output."""
    return GlobalRelation.from_function(2, lambda x, y: (y, x), "two_way")


def three_party_cyclic() -> GlobalRelation:
    """x = ¬b ∧ c, y = a ∧ ¬c, z = ¬a ∧ b."""
    return GlobalRelation.from_function(
        3, lambda a, b, c: ((1 - b) & c, a & (1 - c), (1 - a) & b), "three_party_cyclic")


def bundled_relation(name: str) -> GlobalRelation:
    """Load one of the relation files shipped with the package."""
    from importlib import resources

    path = resources.files("kausal") / "data" / "relations" / f"{name}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled relation {name!r}")
    return GlobalRelation.from_dict(json.loads(path.read_text()))


# -- fixed points -----------------------------------------------------------

def _party_masks(g: GlobalRelation) -> np.ndarray:
    """``masks[p, op, o]``: does party ``p`` under ``op`` reproduce its bit of ``o``?"""
    k = g.k
    o = np.arange(1 << k)
    ins = np.asarray(g.table, dtype=np.int64)
    masks = np.zeros((k, 4, 1 << k), dtype=bool)
    for p in range(k):
        shift = k - 1 - p
        ib, ob = (ins >> shift) & 1, (o >> shift) & 1
        masks[p, CONST0] = ob == 0
        masks[p, CONST1] = ob == 1
        masks[p, IDENTITY] = ob == ib
        masks[p, NEGATION] = ob == 1 - ib
    return masks


def _all_combo_masks(g: GlobalRelation) -> np.ndarray:
    """``(4**k, 2**k)`` boolean fixed-point matrix; combo digit of party 0 is most significant."""
    masks = _party_masks(g)
    acc = masks[0]
    for p in range(1, g.k):
        acc = (acc[:, None, :] & masks[p][None, :, :]).reshape(-1, 1 << g.k)
    return acc


def combo_index(combo: Sequence) -> int:
    idx = 0
    for op in combo:
        idx = idx * 4 + _op_code(op)
    return idx


def combo_of(index: int, k: int) -> tuple:
    return tuple(_op_name((index >> (2 * (k - 1 - p))) & 3) for p in range(k))


def fixed_points(g: GlobalRelation, combo: Sequence) -> set:
    """Output vectors (as bit strings in party order) that survive one round."""
    if len(combo) != g.k:
        raise ValueError(f"combo needs one operation per party ({g.k})")
    masks = _party_masks(g)
    ok = np.ones(1 << g.k, dtype=bool)
    for p, op in enumerate(combo):
        ok &= masks[p, _op_code(op)]
    return {_vec(int(o), g.k) for o in np.flatnonzero(ok)}


@dataclass
class ConsistencyVerdict:
    consistent: bool
    deterministic_process: bool
    per_combo: Dict[tuple, tuple]
    failing_combos: List[tuple]

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "deterministic_process": self.deterministic_process,
            "failing_combos": [list(c) for c in self.failing_combos],
            "per_combo": {",".join(c): sorted(fp) for c, fp in self.per_combo.items()},
        }


def check_logical_consistency(g: GlobalRelation, limit: int = MAX_PARTIES) -> ConsistencyVerdict:
    """Fixed points of every one of the ``4**k`` local-operation combos."""
    if g.k > limit:
        raise TooManyParties(f"k={g.k} exceeds the limit of {limit} parties")
    table = _all_combo_masks(g)
    counts = table.sum(axis=1)
    per_combo = {}
    for c in range(table.shape[0]):
        per_combo[combo_of(c, g.k)] = tuple(_vec(int(o), g.k) for o in np.flatnonzero(table[c]))
    failing = [combo_of(int(c), g.k) for c in np.flatnonzero(counts == 0)]
    return ConsistencyVerdict(not failing, bool(np.all(counts == 1)), per_combo, failing)


# -- scenarios --------------------------------------------------------------

@dataclass
class Party:
    name: str
    A_I: BitString
    A_O: BitString
    control: BitString

    def __post_init__(self):
        if not len(self.A_I) == len(self.A_O) == len(self.control) // 2 or len(self.control) % 2:
            raise LengthMismatch(f"party {self.name}: strings do not describe the same rounds")

    @property
    def rounds(self) -> int:
        return len(self.A_I)

    @property
    def local_relation(self) -> np.ndarray:
        return control_ops(self.control)


@dataclass
class Scenario:
    relation: GlobalRelation
    parties: List[Party]
    combos: np.ndarray  # realized combo index per round
    outputs: np.ndarray  # realized output vector per round
    seed: int

    @property
    def rounds(self) -> int:
        return int(self.combos.size)

    def write(self, path) -> None:
        """JSON header line, then three lines per party: input, output, control."""
        header = {"k": self.relation.k, "rounds": self.rounds, "seed": self.seed,
                  "relation": self.relation.to_dict(), "parties": [p.name for p in self.parties]}
        lines = [json.dumps(header, sort_keys=True)]
        for p in self.parties:
            lines += [str(p.A_I), str(p.A_O), str(p.control)]
        _atomic_write(Path(path), ("\n".join(lines) + "\n").encode("ascii"))

    @classmethod
    def read(cls, path) -> "Scenario":
        lines = Path(path).read_text(encoding="ascii").splitlines()
        try:
            header = json.loads(lines[0])
            g = GlobalRelation.from_dict(header["relation"])
            names = header["parties"]
        except (IndexError, KeyError, json.JSONDecodeError) as exc:
            raise MalformedFile(f"{path}: bad header: {exc}") from None
        if len(lines) != 1 + 3 * len(names):
            raise MalformedFile(f"{path}: expected {3 * len(names)} string lines")
        parties = []
        try:
            for j, nm in enumerate(names):
                i, o, c = (BitString(t) for t in lines[1 + 3 * j: 4 + 3 * j])
                parties.append(Party(nm, i, o, c))
        except ValueError as exc:
            raise MalformedFile(f"{path}: {exc}") from None
        k = g.k
        ops = np.stack([p.local_relation for p in parties])
        combos = np.zeros(ops.shape[1], dtype=np.int64)
        outs = np.zeros(ops.shape[1], dtype=np.int64)
        for p in range(k):
            combos = combos * 4 + ops[p]
            outs = outs * 2 + parties[p].A_O.array
        return cls(g, parties, combos, outs, header.get("seed"))


def party_names(k: int) -> list:
    return [chr(ord("A") + p) for p in range(k)]


def run_scenario(g: GlobalRelation, seed, rounds: int, controls: Optional[Sequence[BitString]] = None,
                 names: Optional[Sequence[str]] = None, th: Thresholds = None) -> Scenario:
    """Run ``rounds`` repetitions of ``g`` with per-party control strings.

    Controls default to gated-incompressible draws, one independent label
    per party.  Rounds with several fixed points pick one uniformly with a
    per-round draw from the seed, so any subset of rounds can be replayed.
    """
    seed = as_seed(seed)
    k = g.k
    names = list(names or party_names(k))
    if controls is None:
        controls = [sample_incompressible(2 * rounds, seed.derive(f"control/{nm}"), thresholds=th)
                    for nm in names]
    if len(controls) != k or any(len(cc) != 2 * rounds for cc in controls):
        raise LengthMismatch(f"need {k} control strings of {2 * rounds} bits")
    ops = np.stack([control_ops(cc) for cc in controls])
    combos = np.zeros(rounds, dtype=np.int64)
    for p in range(k):
        combos = combos * 4 + ops[p]
    table = _all_combo_masks(g)
    counts = table.sum(axis=1)
    empty = np.flatnonzero(counts[combos] == 0)
    if empty.size:
        r = int(empty[0])
        raise InconsistentRelation(f"round {r} realizes combo {combo_of(int(combos[r]), k)} with no fixed point",
                                   round_index=r, combo=combo_of(int(combos[r]), k))
    if counts.min() == 0:
        bad = combo_of(int(np.flatnonzero(counts == 0)[0]), k)
        raise InconsistentRelation(f"relation is not logically consistent (combo {bad} has no fixed point)",
                                   round_index=None, combo=bad)
    # sorted fixed points per combo, padded
    fp = np.full(table.shape, -1, dtype=np.int64)
    for c in range(table.shape[0]):
        pts = np.flatnonzero(table[c])
        fp[c, :pts.size] = pts
    draws = Stream(seed, "scenario/select").words(rounds)
    choice = (draws % counts[combos].astype(np.uint64)).astype(np.int64)
    outputs = fp[combos, choice]
    inputs = g.inputs_for(outputs)
    parties = []
    for p, nm in enumerate(names):
        shift = k - 1 - p
        parties.append(Party(nm, BitString._wrap(((inputs >> shift) & 1).astype(np.uint8)),
                             BitString._wrap(((outputs >> shift) & 1).astype(np.uint8)), controls[p]))
    return Scenario(g, parties, combos, outputs, seed.value)


# -- causal relations from strings ------------------------------------------

PRECEDES = "precedes"
NOT = "not"
INDETERMINATE = "indeterminate"


@dataclass
class CausalRelationMatrix:
    names: list
    entries: list  # entries[i][j]: is party i in the causal past of party j
    margins: np.ndarray
    groups: dict  # (sources tuple, target) -> (entry, margin)
    details: dict = field(default_factory=dict)

    def precedes(self, a: str, b: str) -> bool:
        return self.entries[self.names.index(a)][self.names.index(b)] == PRECEDES

    def group_precedes(self, sources: Sequence[str], target: str) -> bool:
        key = (tuple(sorted(sources)), target)
        if len(key[0]) == 1:
            return self.precedes(key[0][0], target)
        return self.groups.get(key, (NOT, 0.0))[0] == PRECEDES

    def incoming(self, target: str) -> list:
        """All source sets (singletons included) in the causal past of ``target``."""
        out = [(s,) for s in self.names if s != target and self.precedes(s, target)]
        out += [src for (src, tgt), (e, _) in self.groups.items() if tgt == target and e == PRECEDES]
        return out

    def to_dict(self) -> dict:
        return {
            "parties": self.names,
            "entries": self.entries,
            "margins": np.round(self.margins, 6).tolist(),
            "groups": [{"sources": list(s), "target": t, "entry": e, "margin": round(float(m), 6)}
                       for (s, t), (e, m) in sorted(self.groups.items())],
            "details": self.details,
        }


def _call(margin: float) -> str:
    if abs(margin) < GUARD_BAND:
        return INDETERMINATE
    return PRECEDES if margin > 0 else NOT


def derive_causal_relations(parties: Sequence[Party], th: Thresholds = None, c=None,
                            groups: bool = True) -> CausalRelationMatrix:
    """S is in the causal past of B when B_I is not ≈ 0 and the outputs of S
    carry at least ``eps_dep * n`` bits about B_I.

    Group sources are every subset of at least two other parties; their
    outputs enter as separate aligned segments in party-name order.  The
    margin is ``min(K(B_I)/n - eps_zero, gap/n - eps_dep)``.
    """
    th = th or Thresholds()
    parties = list(parties)
    names = [p.name for p in parties]
    by_name = {p.name: p for p in parties}
    n = parties[0].rounds
    _require_length(th, *[p.A_I for p in parties])
    k = len(parties)
    kin = {p.name: estimate_K(p.A_I, c).value_bits for p in parties}

    def margin(sources, target):
        t = by_name[target]
        cond = tuple(by_name[s].A_O for s in sorted(sources))
        gap = kin[target] - estimate_K_cond(t.A_I, cond, c).value_bits
        return min(kin[target] / n - th.eps_zero, gap / n - th.eps_dep)

    entries = [[NOT] * k for _ in range(k)]
    margins = np.zeros((k, k))
    for i, j in itertools.permutations(range(k), 2):
        m = margin((names[i],), names[j])
        margins[i, j] = m
        entries[i][j] = _call(m)
    group_entries = {}
    if groups:
        for j, target in enumerate(names):
            others = [s for s in names if s != target]
            for size in range(2, len(others) + 1):
                for src in itertools.combinations(sorted(others), size):
                    m = margin(src, target)
                    group_entries[(src, target)] = (_call(m), m)
    details = {"K_inputs": kin, "rounds": n}
    return CausalRelationMatrix(names, entries, margins, group_entries, details)


def classify_scenario(matrix: CausalRelationMatrix) -> str:
    """``causal`` when some party has no source set in its causal past."""
    for nm in matrix.names:
        if not matrix.incoming(nm):
            return "causal"
    return "non_causal"


# -- census -----------------------------------------------------------------

@numba.njit(cache=True)
def _entropy(p):
    h = 0.0
    for v in p:
        if v > 0:
            h -= v * math.log2(v)
    return h


@numba.njit(cache=True)
def _classify_one(index, k, info_floor):
    """0 inconsistent, 1 consistent causal, 2 consistent non-causal; plus min/max fixed-point counts."""
    nv = 1 << k
    kmask = nv - 1
    ins = np.empty(nv, dtype=np.int64)
    for o in range(nv):
        ins[o] = (index >> (k * o)) & kmask
    # masks[p, op] as bitsets over output vectors
    masks = np.zeros((k, 4), dtype=np.int64)
    for p in range(k):
        sh = k - 1 - p
        for o in range(nv):
            ob = (o >> sh) & 1
            ib = (ins[o] >> sh) & 1
            if ob == 0:
                masks[p, 0] |= 1 << o
            else:
                masks[p, 1] |= 1 << o
            if ob == ib:
                masks[p, 2] |= 1 << o
            else:
                masks[p, 3] |= 1 << o
    ncombo = 1 << (2 * k)
    dist = np.zeros(nv)
    lo, hi = nv + 1, 0
    for c in range(ncombo):
        m = (1 << nv) - 1
        for p in range(k):
            m &= masks[p, (c >> (2 * (k - 1 - p))) & 3]
        cnt = 0
        for o in range(nv):
            cnt += (m >> o) & 1
        if cnt == 0:
            return 0, 0, hi
        lo = min(lo, cnt)
        hi = max(hi, cnt)
        w = 1.0 / (ncombo * cnt)
        for o in range(nv):
            if (m >> o) & 1:
                dist[o] += w
    # party p has a causal past iff its input is not constant and shares
    # information with the other parties' outputs
    for p in range(k):
        sh = k - 1 - p
        pin = np.zeros(2)
        rest = np.zeros(nv)
        joint = np.zeros(2 * nv)
        for o in range(nv):
            ib = (ins[o] >> sh) & 1
            r = o & ~(1 << sh)
            pin[ib] += dist[o]
            rest[r] += dist[o]
            joint[ib * nv + r] += dist[o]
        h_in = _entropy(pin)
        mi = h_in + _entropy(rest) - _entropy(joint)
        if h_in <= info_floor or mi <= info_floor:
            return 1, lo, hi
    return 2, lo, hi


@numba.njit(cache=True)
def _census_kernel(k, start, stop, info_floor, classes, lo, hi):
    for idx in range(start, stop):
        cl, a, b = _classify_one(idx, k, info_floor)
        classes[idx - start] = cl
        lo[idx - start] = a
        hi[idx - start] = b


@dataclass
class CensusResult:
    k: int
    counts: dict
    exemplars: dict
    classes: Optional[np.ndarray] = None
    min_fixed: Optional[np.ndarray] = None
    max_fixed: Optional[np.ndarray] = None

    def classify(self, g: GlobalRelation) -> str:
        if self.classes is None:
            return classify_relation(g)
        return CLASSES[int(self.classes[g.index])]

    def to_dict(self) -> dict:
        return {"k": self.k, "counts": self.counts, "exemplars": self.exemplars}

    def write_csv(self, path, full: Optional[bool] = None) -> None:
        """Rows ``relation_index, class, min_fixed_points, max_fixed_points``.

        Every relation is listed for ``k <= 2`` (or when ``full``); otherwise
        only the stored exemplars.
        """
        full = self.k <= 2 if full is None else full
        if full and self.classes is None:
            raise ValueError("per-relation classes were not kept")
        if full:
            idx = range(self.classes.size)
        else:
            idx = sorted({i for v in self.exemplars.values() for i in v})
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["relation_index", "class", "min_fixed_points", "max_fixed_points"])
            for i in idx:
                if self.classes is not None:
                    cl, a, b = CLASSES[int(self.classes[i])], int(self.min_fixed[i]), int(self.max_fixed[i])
                else:
                    code, a, b = _classify_one(i, self.k, INFO_FLOOR)
                    cl = CLASSES[code]
                w.writerow([i, cl, a, b])
        tmp.replace(path)


INFO_FLOOR = 1e-12


def classify_relation(g: GlobalRelation) -> str:
    """Census class of one relation (same rule as :func:`census`)."""
    if g.k > 4:
        raise TooManyParties("census classification is limited to k <= 4")
    return CLASSES[_classify_one(g.index, g.k, INFO_FLOOR)[0]]


def census(k: int, workers: int = 1, keep: bool = True, exemplars: int = 8,
           chunk: int = 1 << 20, progress: Optional[Callable[[int, int], None]] = None) -> CensusResult:
    """Classify every bit-wise global relation on ``k`` parties.

    Consistency is exact.  The causal split uses the limit of the
    compressor test: with uniform local operations and uniform choice among
    fixed points, a party has a causal past when its input is random and
    shares Shannon information with the other parties' outputs.
    """
    if k < 1 or k > 3:
        raise TooManyParties("census supports k in {1, 2, 3}")
    total = 1 << (k * (1 << k))
    classes = np.zeros(total, dtype=np.uint8)
    lo = np.zeros(total, dtype=np.uint8)
    hi = np.zeros(total, dtype=np.uint8)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        spans = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda sp: _census_kernel_nogil(k, sp[0], sp[1], INFO_FLOOR, classes[sp[0]:sp[1]],
                                                          lo[sp[0]:sp[1]], hi[sp[0]:sp[1]]), spans))
    else:
        for s in range(0, total, chunk):
            e = min(s + chunk, total)
            _census_kernel(k, s, e, INFO_FLOOR, classes[s:e], lo[s:e], hi[s:e])
            if progress:
                progress(e, total)
    counts = {name: int(np.count_nonzero(classes == code)) for code, name in enumerate(CLASSES)}
    ex = {name: [int(i) for i in np.flatnonzero(classes == code)[:exemplars]] for code, name in enumerate(CLASSES)}
    if keep:
        return CensusResult(k, counts, ex, classes, lo, hi)
    return CensusResult(k, counts, ex)


_census_kernel_nogil = numba.njit(cache=True, nogil=True)(_census_kernel.py_func)
