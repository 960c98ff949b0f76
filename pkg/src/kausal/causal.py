"""Causal structure on a finite set of strings.

``x`` precedes ``y`` (``x ⪯ y``) when ``K(x | y) ≈ 0``: the later string
contains everything about the earlier one.  The order is estimated
pairwise with the complexity proxy and kept raw.  Estimated "≈ 0" is not
exactly transitive, so violations are recorded instead of being closed
over.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .bits import BitString, _atomic_write
from .complexity import Thresholds, Verdict, _require_length, estimate_K_cond, judge
from .errors import OrderInconsistent

PRECEDES = "precedes"
SUCCEEDS = "succeeds"
EQUIVALENT = "equivalent"
SPACELIKE = "spacelike"
INDETERMINATE = "indeterminate"

# |margin| below this ratio is too close to the threshold to call
GUARD_BAND = 0.005


@dataclass
class CausalPoset:
    names: list
    strings: list
    relation: list
    margins: np.ndarray  # margins[i, j] = eps_zero - K(i|j)/len(i)
    values_bits: np.ndarray  # values_bits[i, j] = K(i | j)
    le: np.ndarray  # 1 yes, 0 no, -1 inside the guard band
    thresholds: Thresholds
    compressor_id: str
    violations: list = field(default_factory=list)
    triples_checked: int = 0

    def index(self, name) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no element named {name!r}") from None

    def leq(self, x, y) -> bool:
        """``x ⪯ y`` as estimated (reflexive)."""
        i, j = self.index(x), self.index(y)
        return i == j or self.le[i, j] == 1

    def rel(self, x, y) -> str:
        return self.relation[self.index(x)][self.index(y)]

    def equivalence_classes(self) -> list:
        seen, classes = set(), []
        for i, name in enumerate(self.names):
            if name in seen:
                continue
            cls = sorted(self.names[j] for j in range(len(self.names))
                         if j == i or self.relation[i][j] == EQUIVALENT)
            seen.update(cls)
            classes.append(cls)
        return classes

    def representative(self, name) -> str:
        i = self.index(name)
        return min(self.names[j] for j in range(len(self.names)) if j == i or self.relation[i][j] == EQUIVALENT)

    def violation_rate(self) -> float:
        return len(self.violations) / self.triples_checked if self.triples_checked else 0.0

    def to_dict(self) -> dict:
        return {
            "elements": [{"name": nm, "n": len(s)} for nm, s in zip(self.names, self.strings)],
            "relation": self.relation,
            "margins": np.round(self.margins, 6).tolist(),
            "values_bits": self.values_bits.tolist(),
            "violations": [list(v) for v in self.violations],
            "violation_rate": round(self.violation_rate(), 6),
            "thresholds": vars(self.thresholds),
            "compressor": self.compressor_id,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            _atomic_write(Path(path), (text + "\n").encode())
        return text

    def to_dot(self, path=None) -> str:
        lines = ["digraph causal {"]
        for nm in self.names:
            lines.append(f'  "{nm}";')
        k = len(self.names)
        for i in range(k):
            for j in range(k):
                r = self.relation[i][j]
                if r == PRECEDES:
                    lines.append(f'  "{self.names[i]}" -> "{self.names[j]}";')
                elif r == EQUIVALENT and i < j:
                    lines.append(f'  "{self.names[i]}" -> "{self.names[j]}" [dir=both, style=dashed];')
                elif r == INDETERMINATE and i < j:
                    lines.append(f'  "{self.names[i]}" -> "{self.names[j]}" [dir=none, style=dotted];')
        lines.append("}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            _atomic_write(Path(path), text.encode())
        return text


def _named(C) -> tuple:
    if isinstance(C, Mapping):
        items = list(C.items())
    else:
        items = [(nm, s) for nm, s in C]
    names = [str(nm) for nm, _ in items]
    if len(set(names)) != len(names):
        raise ValueError("element names must be unique")
    return names, [s for _, s in items]


def _call(margin: float) -> int:
    if abs(margin) < GUARD_BAND:
        return -1
    return 1 if margin > 0 else 0


def _combine(fwd: int, back: int) -> str:
    if fwd == 1 and back == 1:
        return EQUIVALENT
    if fwd == 0 and back == 0:
        return SPACELIKE
    if fwd == 1 and back == 0:
        return PRECEDES
    if fwd == 0 and back == 1:
        return SUCCEEDS
    return INDETERMINATE


def build_poset(C, th: Thresholds = None, c=None, prefix: Optional[int] = None) -> CausalPoset:
    """Pairwise order estimates over the named strings ``C``.

    Conditions always enter at full length.  Subjects are evaluated at
    full length unless ``prefix`` restricts them to their first bits.
    """
    th = th or Thresholds()
    names, strings = _named(C)
    if len(names) < 2:
        raise ValueError("a causal structure needs at least two elements")
    _require_length(th, *strings)
    k = len(names)
    values = np.zeros((k, k), dtype=np.int64)
    margins = np.full((k, k), th.eps_zero)
    le = np.ones((k, k), dtype=np.int64)
    compressor_id = "lz77b"
    for i, j in itertools.permutations(range(k), 2):
        subject = strings[i] if prefix is None else strings[i][:prefix]
        est = estimate_K_cond(subject, strings[j], c)
        compressor_id = est.compressor_id
        values[i, j] = est.value_bits
        margins[i, j] = th.eps_zero - est.ratio()
        le[i, j] = _call(margins[i, j])
    relation = [[EQUIVALENT if i == j else _combine(le[i, j], le[j, i]) for j in range(k)] for i in range(k)]
    violations, checked = [], 0
    for i, j, m in itertools.permutations(range(k), 3):
        checked += 1
        if le[i, j] == 1 and le[j, m] == 1 and le[i, m] == 0:
            violations.append((names[i], names[j], names[m]))
    return CausalPoset(names, list(strings), relation, margins, values, le, th, compressor_id,
                       violations, checked)


def _strictly_before(p: CausalPoset, i: int, j: int) -> bool:
    return p.relation[i][j] == PRECEDES


def _bound(p: CausalPoset, subset: Sequence[str], upper: bool):
    if not subset:
        raise ValueError("subset must be nonempty")
    if p.violations:
        raise OrderInconsistent(f"{len(p.violations)} transitivity violations, e.g. {p.violations[0]}")
    idx = [p.index(s) for s in subset]
    k = len(p.names)

    def leq(i, j):
        return i == j or p.le[i, j] == 1

    if upper:
        bounds = [u for u in range(k) if all(leq(s, u) for s in idx)]
        extreme = [u for u in bounds if all(leq(u, v) for v in bounds)]
    else:
        bounds = [u for u in range(k) if all(leq(u, s) for s in idx)]
        extreme = [u for u in bounds if all(leq(v, u) for v in bounds)]
    if not extreme:
        return None
    classes = {p.representative(p.names[u]) for u in extreme}
    if len(classes) != 1:
        return None
    for s in idx:
        if s in extreme:
            return p.names[s]
    return classes.pop()


def common_effect(p: CausalPoset, subset: Sequence[str]) -> Optional[str]:
    """Least upper bound of ``subset`` (unique up to equivalence) or ``None``."""
    return _bound(p, subset, upper=True)


def common_cause(p: CausalPoset, subset: Sequence[str]) -> Optional[str]:
    """Greatest lower bound of ``subset`` (unique up to equivalence) or ``None``."""
    return _bound(p, subset, upper=False)


@dataclass(frozen=True)
class Extremes:
    big_bang: Optional[str]
    big_crunch: Optional[str]
    causeless: tuple
    effectless: tuple

    def to_dict(self):
        return {"big_bang": self.big_bang, "big_crunch": self.big_crunch,
                "causeless": list(self.causeless), "effectless": list(self.effectless)}


def detect_extremes(p: CausalPoset) -> Extremes:
    k = len(p.names)
    causeless = tuple(p.names[j] for j in range(k) if not any(_strictly_before(p, i, j) for i in range(k)))
    effectless = tuple(p.names[i] for i in range(k) if not any(_strictly_before(p, i, j) for j in range(k)))
    smallest = [i for i in range(k) if all(i == j or p.le[i, j] == 1 for j in range(k))]
    greatest = [j for j in range(k) if all(i == j or p.le[i, j] == 1 for i in range(k))]

    def pick(found):
        reps = {p.representative(p.names[u]) for u in found}
        return reps.pop() if len(reps) == 1 else None

    return Extremes(pick(smallest), pick(greatest), causeless, effectless)


@dataclass(frozen=True)
class Determinism:
    deterministic: bool
    witnesses: tuple
    margins: dict

    @property
    def label(self) -> str:
        return "deterministic" if self.deterministic else "probabilistic"

    def to_dict(self):
        return {"label": self.label, "witnesses": list(self.witnesses),
                "margins": {k: round(v, 6) for k, v in self.margins.items()}}


def classify_determinism(p: CausalPoset, c=None) -> Determinism:
    """Every element with strict causes must be ≈ computable from all of them."""
    th = p.thresholds
    k = len(p.names)
    witnesses, margins = [], {}
    for j in range(k):
        causes = [p.strings[i] for i in range(k) if _strictly_before(p, i, j)]
        if not causes:
            continue
        v = judge("approx_zero", estimate_K_cond(p.strings[j], tuple(causes), c), th, c)
        margins[p.names[j]] = v.margin
        if not v.passed:
            witnesses.append(p.names[j])
    return Determinism(not witnesses, tuple(witnesses), margins)


def check_triviality(p: CausalPoset, c=None) -> Verdict:
    """A deterministic structure with a big bang must have all elements equivalent.

    Returns ``passed=None`` (skipped) when the hypotheses are not met and a
    failing verdict listing counterexample pairs otherwise.
    """
    det = classify_determinism(p, c)
    ext = detect_extremes(p)
    details = {"determinism": det.to_dict(), "extremes": ext.to_dict()}
    if not det.deterministic:
        return Verdict(None, 0.0, "triviality", dict(details, skipped="structure is probabilistic"))
    if ext.big_bang is None:
        return Verdict(None, 0.0, "triviality", dict(details, skipped="no big bang"))
    k = len(p.names)
    counter = [(p.names[i], p.names[j], round(float(min(p.margins[i, j], p.margins[j, i])), 6))
               for i in range(k) for j in range(i + 1, k) if p.relation[i][j] != EQUIVALENT]
    margin = float(min(min(p.margins[i, j], p.margins[j, i]) for i in range(k) for j in range(k) if i != j))
    details["counterexamples"] = counter
    return Verdict(not counter, margin, "triviality", details)


@dataclass(frozen=True)
class CausalDistance:
    frm: str
    to: str
    value_bits: int


def causal_distance(x: BitString, y: BitString, c=None, th: Thresholds = None,
                    names=("x", "y")) -> CausalDistance:
    """How far ``y`` lies in the future of ``x``: ``K(y | x)``."""
    th = th or Thresholds()
    _require_length(th, x, y)
    return CausalDistance(names[0], names[1], int(estimate_K_cond(y, x, c).value_bits))


# -- constructed string sets ------------------------------------------------

def _block_moves(s: BitString, stream, blocks: int) -> BitString:
    """Reorder ``blocks`` equal blocks and complement some of them."""
    n = len(s) - len(s) % blocks
    parts = s.array[:n].reshape(blocks, -1)
    order = stream.permutation(blocks)
    flip = stream.bits(blocks)
    out = np.concatenate([parts[i] ^ f for i, f in zip(order, flip)] + [s.array[n:]])
    return BitString._wrap(out.astype(np.uint8))


def reversible_variants(base: BitString, count: int, seed) -> list:
    """``count`` cheap invertible rewrites of ``base`` (rotations, complements, block moves)."""
    from .rng import Stream

    st = Stream(seed, "variants")
    out = []
    for i in range(count):
        kind = int(st.integers(3, 1)[0])
        if kind == 0:
            v = base.rotate(int(st.integers(len(base), 1)[0]))
        elif kind == 1:
            v = BitString._wrap(base.array ^ 1)
        else:
            v = _block_moves(base, st, int(st.integers(7, 1)[0]) + 2)
        out.append(v)
    return out


def construct_set(kind: str, n: int, size: int, seed) -> dict:
    """Named strings with a known causal structure.

    ``equivalent``: a seeded incompressible string and invertible rewrites
    of it (deterministic, every element a big bang).  ``chain``: growing
    prefixes of one string.  ``spacelike``: independent draws.
    ``diamond``: a, a‖r, a‖r', a‖r‖r'.
    """
    from .bits import sample_incompressible
    from .rng import as_seed

    seed = as_seed(seed)
    if size < 2:
        raise ValueError("size must be >= 2")
    if kind == "equivalent":
        base = sample_incompressible(n, seed.derive("base"))
        items = [base] + reversible_variants(base, size - 1, seed.derive("rewrites"))
    elif kind == "chain":
        r = sample_incompressible(n, seed.derive("base"))
        items = [r[: n * (i + 1) // size] for i in range(size)]
    elif kind == "spacelike":
        items = [sample_incompressible(n, seed.derive(f"item/{i}")) for i in range(size)]
    elif kind == "diamond":
        a, r1, r2 = (sample_incompressible(n, seed.derive(f"part/{i}")) for i in range(3))
        from .bits import concat

        items = [a, concat(a, r1), concat(a, r2), concat(a, r1, r2)]
    else:
        raise ValueError(f"unknown construction {kind!r}")
    return {f"s{i}": s for i, s in enumerate(items)}
