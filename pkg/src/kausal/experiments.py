"""Registered experiments and their reports.

Each experiment declares a parameter schema (type and default per key),
runs against a validated :class:`~kausal.config.ExperimentConfig`, and
fills a :class:`RunReport`.  A run passes when none of its named checks
failed.
"""

from __future__ import annotations

import csv
import difflib
import io
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .bits import BitString, _atomic_write, read_bitstring, sample_incompressible
from .complexity import _jsonable, estimate_K, estimate_K_cond, get_compressor
from .errors import GoldenMismatch, InvalidConfig, UnknownExperiment

REPORT_FILE = "report.jsonl"
TIMINGS_FILE = "timings.json"


# -- report -----------------------------------------------------------------

@dataclass
class RunReport:
    experiment: str
    config: dict
    config_hash: str
    version: str = __version__
    records: List[dict] = field(default_factory=list)
    checks: List[dict] = field(default_factory=list)
    tables: Dict[str, tuple] = field(default_factory=dict)
    files: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def record(self, kind: str, name: str, /, **values) -> None:
        self.records.append(_jsonable({**values, "record": kind, "name": name}))

    def check(self, name: str, passed: Optional[bool], /, **values) -> None:
        self.checks.append(_jsonable({**values, "record": "check", "name": name, "passed": passed}))

    def table(self, name: str, header: list, rows: list) -> None:
        self.tables[name] = (list(header), [list(r) for r in rows])

    @property
    def passed(self) -> bool:
        return all(c["passed"] is not False for c in self.checks)

    def lines(self) -> list:
        """Deterministic report payload, one JSON object per line."""
        head = {"record": "run", "experiment": self.experiment, "config_hash": self.config_hash,
                "version": self.version, "config": self.config}
        tail = {"record": "summary", "passed": self.passed,
                "failed_checks": [c["name"] for c in self.checks if c["passed"] is False]}
        return [json.dumps(o, sort_keys=True) for o in [head, *self.records, *self.checks, tail]]

    def payload(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _atomic_write(out / REPORT_FILE, self.payload().encode())
        for name, (header, rows) in self.tables.items():
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            _atomic_write(out / f"{name}.csv", buf.getvalue().encode())
        for name, text in self.files.items():
            _atomic_write(out / name, text.encode())
        _atomic_write(out / TIMINGS_FILE, (json.dumps(self.timings, sort_keys=True, indent=2) + "\n").encode())
        return out


# -- registry ---------------------------------------------------------------

@dataclass
class Experiment:
    name: str
    schema: dict
    body: Callable
    summary: str
    validator: Optional[Callable] = None

    def validate(self, cfg) -> None:
        if self.validator:
            self.validator(cfg)


EXPERIMENTS: Dict[str, Experiment] = {}


def experiment(name: str, summary: str, validator=None, **schema):
    def deco(fn):
        EXPERIMENTS[name] = Experiment(name, schema, fn, summary, validator)
        return fn
    return deco


def get_experiment(name: str) -> Experiment:
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise UnknownExperiment(f"unknown experiment {name!r}; known: {', '.join(sorted(EXPERIMENTS))}") from None


@dataclass
class Context:
    threads: int = 1


def run(cfg, threads: int = 1) -> RunReport:
    """Execute the configured experiment."""
    exp = get_experiment(cfg.experiment)
    report = RunReport(exp.name, cfg.canonical(), cfg.config_hash())
    t0 = time.perf_counter()
    exp.body(cfg, report, Context(max(1, int(threads))))
    report.timings["total_seconds"] = round(time.perf_counter() - t0, 3)
    return report


def _c(cfg):
    return get_compressor(cfg.compressor)


def _positive(*keys):
    def check(cfg):
        for k in keys:
            if cfg.params[k] <= 0:
                raise InvalidConfig(f"{k} must be positive")
    return check


# -- nonlocality ------------------------------------------------------------

def _pr_strategy(name: str):
    from .nonlocality import Biased, bundled_strategies

    if name == "nonlocal_unbiased":
        return name
    if name.startswith("biased:"):
        return Biased(float(name.split(":", 1)[1]))
    local = {s.name: s for s in bundled_strategies()}
    if name.startswith("local:") and name[6:] in local:
        return local[name[6:]]
    raise InvalidConfig(f"unknown PR strategy {name!r}")


def _validate_pr(cfg):
    _positive("n")(cfg)
    _pr_strategy(cfg.params["strategy"])


@experiment("pr-inherit", "complexity of PR-box outputs with incompressible inputs",
            _validate_pr, n=(int, 100_000), strategy=(str, "nonlocal_unbiased"),
            min_kx=(float, 0.5), min_kx_given_a=(float, 0.3), save_data=(bool, False))
def _pr_inherit(cfg, rep, ctx):
    from .nonlocality import LocalStrategy, check_relation, gen_pr, test_locality, test_no_signaling, write_quadruple

    p, th, c = cfg.params, cfg.thresholds, _c(cfg)
    strat = _pr_strategy(p["strategy"])
    q = gen_pr(p["n"], cfg.seed, strat)
    n = len(q)
    rel = check_relation(q)
    rep.record("oracle", "pr_relation", satisfied=rel.ok_count, violations=rel.violations)
    kx = estimate_K(q.x, c)
    kxa = estimate_K_cond(q.x, q.a, c)
    rep.record("estimate", "K_x", value_bits=kx.value_bits, ratio=kx.ratio())
    rep.record("estimate", "K_x_given_a", value_bits=kxa.value_bits, ratio=kxa.ratio())
    ns = test_no_signaling(q, th, c)
    rep.record("verdict", "no_signaling", **ns.to_dict())
    if isinstance(strat, LocalStrategy):
        parts = (q.a, q.hidden.lam) if q.hidden else (q.a,)
        kl = estimate_K_cond(q.x, parts, c)
        rep.record("estimate", "K_x_given_a_lambda", value_bits=kl.value_bits, ratio=kl.ratio())
        loc = test_locality(q, q.hidden, th, c)
        rep.record("verdict", "locality", **loc.to_dict())
        rep.check("local_collapse", kl.ratio() <= th.eps_zero, value=kl.ratio(), bound=th.eps_zero)
        rep.check("no_signaling", ns.passed, value=ns.margin, bound=0.0)
    else:
        rep.check("pr_relation_exact", rel.violations == 0, value=rel.violations, bound=0)
        rep.check("K_x_ratio", kx.ratio() >= p["min_kx"], value=kx.ratio(), bound=p["min_kx"])
        rep.check("K_x_given_a_ratio", kxa.ratio() >= p["min_kx_given_a"], value=kxa.ratio(),
                  bound=p["min_kx_given_a"])
        rep.check("no_signaling", ns.passed, value=ns.margin, bound=0.0)
    if p["save_data"]:
        rep.files["quadruple.txt"] = _quadruple_text(q, write_quadruple)
    rep.record("info", "rounds", n=n)


def _quadruple_text(q, writer) -> str:
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "q.txt"
        writer(path, q)
        return path.read_text()


def _validate_chained(cfg):
    _positive("n")(cfg)
    if cfg.params["m"] < 3:
        raise InvalidConfig("m must be >= 3")
    er = cfg.params["error_rate"]
    if er is not None and er != "" and not 0 <= float(er) < 1:
        raise InvalidConfig("error_rate must lie in [0, 1)")


@experiment("chained-bell", "chained Bell statistics and the masked conditional K(chi|b)",
            _validate_chained, n=(int, 1_000_000), m=(int, 8), error_rate=(str, ""),
            b_fraction_tol=(float, 0.01), chi_tol=(float, 0.15), error_tol=(float, 0.2))
def _chained(cfg, rep, ctx):
    from .nonlocality import chained_chi_given_b, chained_indicator, check_relation, gen_chained

    p, c = cfg.params, _c(cfg)
    m, n = p["m"], p["n"]
    rate = float(p["error_rate"]) if p["error_rate"] else 1.0 / m ** 2
    q = gen_chained(n, m, cfg.seed, rate)
    chi = chained_indicator(q.a, q.b)
    b_frac = float(np.mean(q.b.array == 1))
    rel = check_relation(q)
    viol = rel.fraction()
    kc = chained_chi_given_b(q, c)
    target = n / m
    rep.record("estimate", "K_chi_given_b", value_bits=kc.value_bits, target_bits=target,
               ratio_to_target=kc.value_bits / target)
    rep.record("oracle", "chi_ones", count=chi.count())
    rep.record("oracle", "b_equals_1_fraction", value=b_frac, expected=1.0 / m)
    rep.record("oracle", "violation_fraction", value=viol, configured=rate)
    rep.check("b_fraction", abs(b_frac - 1.0 / m) <= p["b_fraction_tol"], value=b_frac,
              bound=[1.0 / m - p["b_fraction_tol"], 1.0 / m + p["b_fraction_tol"]])
    lo, hi = target * (1 - p["chi_tol"]), target * (1 + p["chi_tol"])
    rep.check("K_chi_given_b", lo <= kc.value_bits <= hi, value=kc.value_bits, bound=[lo, hi])
    rep.check("violation_rate", abs(viol - rate) <= p["error_tol"] * rate, value=viol,
              bound=[rate * (1 - p["error_tol"]), rate * (1 + p["error_tol"])])
    # a fixed positive fraction of n, well below the typical value
    kx = estimate_K(q.x, c).value_bits
    rep.check("K_x_lower", kx >= n / (6 * m), value=kx, bound=n / (6 * m))
    # chi is recoverable from both outputs once the failing positions are known
    pos = rel.positions_bits()
    entropy = n * (-viol * math.log2(viol) - (1 - viol) * math.log2(1 - viol)) if 0 < viol < 1 else 0.0
    kxb, kyb = estimate_K_cond(q.x, q.b, c).value_bits, estimate_K_cond(q.y, q.b, c).value_bits
    rep.record("estimate", "violation_positions", exact_bits=pos, entropy_bits=entropy,
               n_over_3m_bits=n / (3 * m))
    rep.check("chi_budget", kxb + kyb + pos >= kc.value_bits, value=kxb + kyb + pos, bound=kc.value_bits)


@experiment("magic-square", "magic-square game value and sampled runs", _positive("n"),
            n=(int, 90_000), strategy=(str, "deterministic"), tolerance=(float, 0.01))
def _magic(cfg, rep, ctx):
    from .nonlocality import check_relation, gen_magic_square, magic_square_value

    p = cfg.params
    value = magic_square_value()
    rep.record("oracle", "classical_value", value=str(value), float=float(value))
    rep.check("classical_value", value == Fraction(8, 9), value=str(value), bound="8/9")
    q = gen_magic_square(p["n"], cfg.seed, p["strategy"])
    win = 1.0 - check_relation(q).fraction()
    rep.record("oracle", "win_fraction", strategy=p["strategy"], value=win)
    if p["strategy"] == "consistent":
        rep.check("all_rounds_won", win == 1.0, value=win, bound=1.0)
    else:
        rep.check("win_fraction", abs(win - float(value)) <= p["tolerance"], value=win,
                  bound=[float(value) - p["tolerance"], float(value) + p["tolerance"]])


def _validate_parallel(cfg):
    if cfg.params["rounds"] not in (1, 2):
        raise InvalidConfig("rounds must be 1 or 2 (exhaustive search)")


@experiment("parallel-value", "exhaustive value of parallel PR games", _validate_parallel, rounds=(int, 1))
def _parallel(cfg, rep, ctx):
    from .nonlocality import pr_parallel_value

    r = cfg.params["rounds"]
    v = pr_parallel_value(r)
    total = 4 ** r
    rep.record("oracle", "parallel_value", rounds=r, wins=v, pairs=total, fraction=v / total)
    rep.check("below_perfect", v < total, value=v, bound=total)
    if r == 1:
        rep.check("single_round_value", v == 3, value=v, bound=3)


# -- causal structure -------------------------------------------------------

def _strings_from_config(cfg) -> dict:
    from .causal import construct_set

    p = cfg.params
    if p["files"]:
        out = {}
        for f in p["files"]:
            path = cfg.resolve_path(f)
            if not path.exists():
                raise InvalidConfig(f"input file {path} does not exist")
            out[path.stem] = read_bitstring(path, p["format"])
        return out
    return construct_set(p["construction"], p["n"], p["size"], cfg.seed)


@experiment("poset-build", "estimated causal order on a set of strings", _positive("n", "size"),
            construction=(str, "diamond"), files=(list, []), format=(str, "ascii01"),
            n=(int, 20_000), size=(int, 4), max_violation_rate=(float, 0.0))
def _poset(cfg, rep, ctx):
    from .causal import build_poset, classify_determinism, detect_extremes

    C = _strings_from_config(cfg)
    c = _c(cfg)
    poset = build_poset(C, cfg.thresholds, c)
    d = poset.to_dict()
    rep.record("estimate", "poset", relation=d["relation"], margins=d["margins"], values_bits=d["values_bits"])
    rep.record("verdict", "extremes", **detect_extremes(poset).to_dict())
    rep.record("verdict", "determinism", **classify_determinism(poset, c).to_dict())
    rep.record("oracle", "violations", triples=poset.triples_checked, violations=d["violations"])
    rows = [[a, b, poset.rel(a, b), round(float(poset.margins[i, j]), 6)]
            for i, a in enumerate(poset.names) for j, b in enumerate(poset.names) if i != j]
    rep.table("relations", ["x", "y", "relation", "margin"], rows)
    rep.files["poset.dot"] = poset.to_dot()
    rate = poset.violation_rate()
    rep.check("violation_rate", rate <= cfg.params["max_violation_rate"], value=rate,
              bound=cfg.params["max_violation_rate"])


@experiment("triviality", "deterministic structures with a big bang are trivial", _positive("sets", "n"),
            sets=(int, 20), n=(int, 16_384), min_size=(int, 3), max_size=(int, 6))
def _triviality(cfg, rep, ctx):
    from .causal import build_poset, check_triviality, construct_set
    from .rng import as_seed

    p, c = cfg.params, _c(cfg)
    span = max(1, p["max_size"] - p["min_size"] + 1)
    rows, ok = [], True
    for i in range(p["sets"]):
        size = p["min_size"] + i % span
        C = construct_set("equivalent", p["n"], size, as_seed(cfg.seed).derive(f"set/{i}"))
        v = check_triviality(build_poset(C, cfg.thresholds, c), c)
        counter = v.details.get("counterexamples", [])
        rows.append([i, size, v.passed, round(v.margin, 6), len(counter)])
        ok &= v.passed is True and not counter
        rep.record("verdict", f"set_{i}", passed=v.passed, margin=v.margin, counterexamples=counter,
                   skipped=v.details.get("skipped"))
    rep.table("sets", ["set", "size", "passed", "margin", "counterexamples"], rows)
    rep.check("all_sets_trivial", ok, value=sum(1 for r in rows if r[2] is True), bound=p["sets"])


# -- thermodynamics ---------------------------------------------------------

@experiment("fuel", "fuel-value bounds for standard sources", _positive("n"),
            n=(int, 100_000), T=(float, 300.0), zeros_lower=(float, 0.98), random_upper=(float, 0.05),
            helper_upper=(float, 0.9))
def _fuel(cfg, rep, ctx):
    from .rng import as_seed
    from .thermo import fuel_bounds

    p, c = cfg.params, _c(cfg)
    n = p["n"]
    rnd = sample_incompressible(n, as_seed(cfg.seed).derive("fuel/S"))
    cases = {
        "zeros": (BitString.zeros(n), None),
        "random": (rnd, None),
        "random_with_copy": (rnd, rnd),
    }
    rows = []
    for name, (S, X) in cases.items():
        fr = fuel_bounds(S, X, c, p["T"])
        rep.record("estimate", f"fuel_{name}", **fr.to_dict())
        rows.append([name, n, fr.lower_bound_bits, fr.upper_bound_bits])
        if name == "zeros":
            rep.check("zeros_lower", fr.lower_bound_bits >= p["zeros_lower"] * n, value=fr.lower_bound_bits,
                      bound=p["zeros_lower"] * n)
        elif name == "random":
            rep.check("random_upper", fr.upper_bound_bits <= p["random_upper"] * n, value=fr.upper_bound_bits,
                      bound=p["random_upper"] * n)
        else:
            rep.check("helper_upper", fr.upper_bound_bits >= p["helper_upper"] * n, value=fr.upper_bound_bits,
                      bound=p["helper_upper"] * n)
        if fr.lower_bound_bits > fr.upper_bound_bits:
            rep.record("info", f"bounds_crossed_{name}", lower=fr.lower_bound_bits, upper=fr.upper_bound_bits)
    rep.table("fuel", ["case", "n", "lower_bound_bits", "upper_bound_bits"], rows)


@experiment("bennett", "constructive extraction with a reversible copy generator", _positive("n"),
            n=(int, 100_000), extra_x=(int, 0))
def _bennett(cfg, rep, ctx):
    from .bits import concat
    from .rng import as_seed
    from .thermo import bennett_extract, copy_generator

    p = cfg.params
    n = p["n"]
    X = sample_incompressible(n + p["extra_x"], as_seed(cfg.seed).derive("bennett/X"))
    S = X[:n]
    res = bennett_extract(S, X, copy_generator(len(X), n))
    expected = concat(BitString.zeros(n), X, BitString.zeros(n))
    restored = res.final_tape == expected
    rep.record("oracle", "bennett", extracted_zeros=res.extracted_zeros, len_S=n, gates=int(len(res.transcript)),
               layout=res.layout, helper_restored=bool(restored))
    rep.check("extracted_all", res.extracted_zeros == n, value=res.extracted_zeros, bound=n)
    rep.check("helper_restored", bool(restored), value=bool(restored), bound=True)


def _source_string(cfg) -> BitString:
    from .rng import Stream, as_seed

    p = cfg.params
    n, seed = p["n"], as_seed(cfg.seed)
    src = p["source"]
    if src == "file":
        path = cfg.resolve_path(p["file"])
        if not path.exists():
            raise InvalidConfig(f"input file {path} does not exist")
        return read_bitstring(path, p["format"])
    if src == "zeros":
        return BitString.zeros(n)
    if src == "random":
        return sample_incompressible(n, seed.derive("source"))
    if src == "half":
        return BitString(np.concatenate([sample_incompressible(n // 2, seed.derive("source")).array,
                                         np.zeros(n - n // 2, np.uint8)]))
    if src == "hamming":
        return BitString._wrap(Stream(seed, "source/hamming").bernoulli(p["p"], n))
    if src == "runs":
        cuts = np.sort(Stream(seed, "source/runs").permutation(n - 1)[: p["runs"] - 1] + 1)
        bits = np.zeros(n, np.uint8)
        edges = np.concatenate([[0], cuts, [n]])
        for i in range(len(edges) - 1):
            bits[edges[i]: edges[i + 1]] = i % 2
        return BitString._wrap(bits)
    raise InvalidConfig(f"unknown source {src!r}")


def _validate_source(cfg):
    _positive("n")(cfg)
    if cfg.params["source"] not in ("zeros", "random", "half", "hamming", "runs", "file"):
        raise InvalidConfig(f"unknown source {cfg.params['source']!r}")
    if cfg.params["source"] == "file" and not cfg.params["file"]:
        raise InvalidConfig("source = file needs a file parameter")


@experiment("structure-fn", "restricted structure function and macrostate", _validate_source,
            source=(str, "half"), n=(int, 8192), p=(float, 0.1), runs=(int, 50), file=(str, ""),
            format=(str, "ascii01"), tol=(float, 0.1), agreement=(float, 0.1), slack_bits=(int, 128))
def _structure(cfg, rep, ctx):
    from .thermo import structure_function

    p = cfg.params
    S = _source_string(cfg)
    sf = structure_function(S, tol=p["tol"])
    d = sf.to_dict()
    rep.record("estimate", "structure_function", k0=d["k0"], macrostate=d["macrostate"],
               fuel_upper_bound_bits=d["fuel_upper_bound_bits"], n=len(S))
    rep.table("staircase", ["k", "log_size", "family"],
              [[round(k, 4), round(ls, 4), m.family] for k, ls, m in sf.points])
    k = estimate_K(S, _c(cfg)).value_bits
    two_part = sf.k0 + sf.log_size
    bound = max(p["agreement"] * k, p["slack_bits"])
    rep.record("estimate", "two_part_vs_compressor", two_part_bits=two_part, K_bits=k)
    rep.check("two_part_agreement", abs(two_part - k) <= bound, value=two_part - k, bound=bound)


def _validate_second_law(cfg):
    _positive("width", "steps", "programs", "gates")(cfg)
    if cfg.params["exhaustive_width"] > 20:
        raise InvalidConfig("exhaustive_width must be <= 20")


@experiment("second-law", "reversibility checks and the complexity audit of reversible traces",
            _validate_second_law, width=(int, 4096), steps=(int, 1000), snapshot_every=(int, 1),
            start=(str, "zeros"), slope=(float, 8.0), slack=(float, 128.0), programs=(int, 100),
            gates=(int, 200), exhaustive_width=(int, 16), random_tapes=(int, 8))
def _second_law(cfg, rep, ctx):
    from .rng import as_seed
    from .thermo import ReversibleMachine, exhaustive_reversibility, random_program, second_law_audit

    p, c = cfg.params, _c(cfg)
    seed = as_seed(cfg.seed)
    restored = 0
    for i in range(p["programs"]):
        prog = random_program(p["exhaustive_width"], p["gates"], seed.derive(f"exhaustive/{i}"))
        res = exhaustive_reversibility(prog, p["exhaustive_width"])
        restored += res["restored"] and res["bijective"]
    rep.record("oracle", "exhaustive_reversibility", programs=p["programs"], width=p["exhaustive_width"],
               restored=restored)
    rep.check("exhaustive_reversibility", restored == p["programs"], value=restored, bound=p["programs"])
    ok = 0
    for i in range(p["random_tapes"]):
        prog = random_program(p["width"], p["gates"], seed.derive(f"wide/{i}"))
        tape = sample_incompressible(p["width"], seed.derive(f"wide/tape/{i}"))
        m = ReversibleMachine(tape, prog)
        m.run()
        ok += m.tape != tape and m.invert() == tape
    rep.record("oracle", "randomized_reversibility", tapes=p["random_tapes"], width=p["width"], restored=ok)
    rep.check("randomized_reversibility", ok == p["random_tapes"], value=ok, bound=p["random_tapes"])
    start = BitString.zeros(p["width"]) if p["start"] == "zeros" else sample_incompressible(
        p["width"], seed.derive("audit/tape"))
    prog = random_program(p["width"], p["steps"], seed.derive("audit/program"))
    trace = ReversibleMachine(start, prog).run(snapshot_every=p["snapshot_every"])
    audit = second_law_audit(trace, c, p["slope"], p["slack"])
    rep.record("verdict", "second_law_audit", **audit.to_dict())
    rep.table("complexity_trace", ["step", "K_bits"],
              [[int(s), int(k)] for s, k in zip(trace.steps, audit.complexities)])
    rep.check("second_law", audit.violations == 0, value=audit.violations, bound=0)


@experiment("mixing-demo", "macrostates while two species mix under reversible swaps",
            _positive("n", "swaps", "snapshots"), n=(int, 256), swaps=(int, 200_000), snapshots=(int, 8))
def _mixing(cfg, rep, ctx):
    from .thermo import mixing_demo

    p = cfg.params
    res = mixing_demo(p["n"], p["swaps"], p["snapshots"], cfg.seed)
    frames = res["frames"]
    rep.table("frames", ["step", "macrostate", "log_size", "k0"],
              [[f["step"], f["macrostate"], f["log_size"], f["k0"]] for f in frames])
    rep.record("estimate", "frames", frames=frames)
    rep.check("entropy_grows", frames[-1]["log_size"] > frames[0]["log_size"],
              value=[frames[0]["log_size"], frames[-1]["log_size"]], bound="last > first")


# -- processes --------------------------------------------------------------

def _relation(cfg):
    from .process import GlobalRelation, bundled_relation

    ref = cfg.params["relation"]
    try:
        return bundled_relation(ref)
    except FileNotFoundError:
        pass
    path = cfg.resolve_path(ref)
    if not path.exists():
        raise InvalidConfig(f"relation {ref!r} is neither bundled nor an existing file")
    return GlobalRelation.load(path)


def _validate_relation(cfg):
    _relation(cfg)
    exp = cfg.params.get("expect")
    if exp is not None and exp not in _EXPECT[cfg.experiment]:
        raise InvalidConfig(f"expect must be one of {_EXPECT[cfg.experiment]}")


_EXPECT = {"process-check": ("any", "consistent", "inconsistent"), "process-run": ("any", "causal", "non_causal")}


@experiment("process-check", "logical consistency of a global relation", _validate_relation,
            relation=(str, "two_way"), expect=(str, "any"))
def _process_check(cfg, rep, ctx):
    from .process import check_logical_consistency

    g = _relation(cfg)
    v = check_logical_consistency(g)
    verdict = "consistent" if v.consistent else "inconsistent"
    rep.record("oracle", "consistency", verdict=verdict, deterministic_process=v.deterministic_process,
               failing_combos=[list(cb) for cb in v.failing_combos], relation=g.to_dict())
    rep.table("combos", ["combo", "fixed_points"],
              [[",".join(cb), " ".join(fp) if fp else "-"] for cb, fp in v.per_combo.items()])
    exp = cfg.params["expect"]
    rep.check("expected_verdict", None if exp == "any" else verdict == exp, value=verdict, bound=exp)


def _parse_requirements(items):
    reqs = []
    for item in items:
        neg = item.startswith("!")
        body = item[1:] if neg else item
        if "->" not in body:
            raise InvalidConfig(f"requirement {item!r} must look like A->B or !A->B")
        src, dst = body.split("->", 1)
        reqs.append((item, neg, tuple(sorted(src.split("+"))), dst))
    return reqs


def _validate_run(cfg):
    _validate_relation(cfg)
    _positive("rounds", "runs")(cfg)
    _parse_requirements(cfg.params["require"])


@experiment("process-run", "seeded runs of a relation and the causal relations they imply", _validate_run,
            relation=(str, "one_way"), rounds=(int, 100_000), runs=(int, 1), expect=(str, "any"),
            require=(list, []), min_agreement=(float, 0.99))
def _process_run(cfg, rep, ctx):
    from .process import check_logical_consistency, classify_scenario, derive_causal_relations, run_scenario
    from .rng import as_seed

    p, c = cfg.params, _c(cfg)
    g = _relation(cfg)
    reqs = _parse_requirements(p["require"])
    cons = check_logical_consistency(g)
    rep.record("oracle", "consistency", consistent=cons.consistent,
               failing_combos=[list(cb) for cb in cons.failing_combos])
    hits = {r[0]: 0 for r in reqs}
    classes = {"causal": 0, "non_causal": 0}
    rows = []
    for i in range(p["runs"]):
        seed = as_seed(cfg.seed) if p["runs"] == 1 else as_seed(cfg.seed).derive(f"run/{i}")
        sc = run_scenario(g, seed, p["rounds"], th=cfg.thresholds)
        mat = derive_causal_relations(sc.parties, cfg.thresholds, c)
        cls = classify_scenario(mat)
        classes[cls] += 1
        for item, neg, src, dst in reqs:
            hits[item] += mat.group_precedes(src, dst) != neg
        rows.append([i, cls] + [e for row in mat.entries for e in row])
        if i == 0 or p["runs"] <= 4:
            rep.record("estimate", f"run_{i}", classification=cls, **mat.to_dict())
    names = sc.parties and [q.name for q in sc.parties]
    rep.table("runs", ["run", "class"] + [f"{a}->{b}" for a in names for b in names], rows)
    rep.record("oracle", "classification_counts", **classes)
    need = math.ceil(p["min_agreement"] * p["runs"])
    for item, *_ in reqs:
        rep.check(f"require {item}", hits[item] >= need, value=hits[item], bound=need)
    if p["expect"] != "any":
        rep.check("expected_class", classes[p["expect"]] >= need, value=classes[p["expect"]], bound=need)


def _validate_census(cfg):
    if cfg.params["k"] not in (1, 2, 3):
        raise InvalidConfig("census supports k in {1, 2, 3}")


@experiment("census", "classify every bit-wise relation on k parties", _validate_census,
            k=(int, 2), exemplars=(int, 8), full_table=(bool, False))
def _census(cfg, rep, ctx):
    from .process import CLASSES, census, one_way_channel, three_party_cyclic, two_way_channel

    p = cfg.params
    k = p["k"]
    res = census(k, workers=ctx.threads, exemplars=p["exemplars"])
    rep.record("oracle", "census", k=k, total=int(res.classes.size), counts=res.counts, exemplars=res.exemplars)
    full = p["full_table"] or k <= 2
    idx = range(res.classes.size) if full else sorted({i for v in res.exemplars.values() for i in v})
    rep.table("census", ["relation_index", "class", "min_fixed_points", "max_fixed_points"],
              [[i, CLASSES[int(res.classes[i])], int(res.min_fixed[i]), int(res.max_fixed[i])] for i in idx])
    rep.check("total", sum(res.counts.values()) == 1 << (k << k), value=sum(res.counts.values()),
              bound=1 << (k << k))
    if k == 2:
        tw, ow = res.classify(two_way_channel()), res.classify(one_way_channel())
        rep.check("two_way_inconsistent", tw == "inconsistent", value=tw, bound="inconsistent")
        rep.check("one_way_causal", ow == "consistent_causal", value=ow, bound="consistent_causal")
    if k == 3:
        nc = res.counts["consistent_non_causal"]
        rep.check("non_causal_exists", nc >= 1, value=nc, bound=1)
        cyc = res.classify(three_party_cyclic())
        rep.check("cyclic_non_causal", cyc == "consistent_non_causal", value=cyc, bound="consistent_non_causal")


# -- goldens ----------------------------------------------------------------

IGNORED_FIELDS = {"version"}


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}.{k}" if prefix else str(k)))
        return out
    if isinstance(obj, list):
        out = {}
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}[{i}]"))
        return out or {prefix: []}
    return {prefix: obj}


def _comparable(text: str) -> list:
    lines = []
    for line in text.splitlines():
        obj = json.loads(line)
        for key in IGNORED_FIELDS:
            obj.pop(key, None)
        lines.append(json.dumps(obj, sort_keys=True))
    return lines


def verify_golden(report_dir, golden_dir) -> None:
    """Compare the deterministic report in ``report_dir`` with the golden copy.

    Raises :class:`GoldenMismatch` (with a unified diff and the differing
    field paths) when they differ or when either file is missing.
    """
    got_path, want_path = Path(report_dir) / REPORT_FILE, Path(golden_dir) / REPORT_FILE
    for path, what in ((want_path, "golden"), (got_path, "report")):
        if not path.exists():
            err = GoldenMismatch(f"missing {what} file {path}")
            err.missing = True
            raise err
    got, want = _comparable(got_path.read_text()), _comparable(want_path.read_text())
    if got == want:
        return
    diff = "\n".join(difflib.unified_diff(want, got, str(want_path), str(got_path), lineterm=""))
    fields = []
    for i in range(max(len(got), len(want))):
        a = _flatten(json.loads(want[i])) if i < len(want) else {}
        b = _flatten(json.loads(got[i])) if i < len(got) else {}
        tag = (json.loads(want[i]) if i < len(want) else json.loads(got[i])).get("name") or \
            (json.loads(want[i]) if i < len(want) else json.loads(got[i])).get("record")
        for key in sorted(set(a) | set(b)):
            if a.get(key, "<absent>") != b.get(key, "<absent>"):
                fields.append(f"{tag}: {key}: {a.get(key, '<absent>')!r} -> {b.get(key, '<absent>')!r}")
    raise GoldenMismatch(f"{len(fields)} field(s) differ:\n" + "\n".join(fields), diff)
