"""Experiment configuration files.

Flat ``key = value`` lines with optional ``[section]`` headers::

    experiment = pr-inherit
    seed = 7

    [params]
    n = 100000

    [thresholds]
    eps_dep = 0.05

    [output]
    dir = runs/pr

Keys before the first header belong to the run itself.  Every key is
checked against the experiment's schema; unknown keys are an error.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

from .complexity import Thresholds
from .errors import InvalidConfig

RUN_KEYS = {"experiment", "seed", "compressor"}
SECTIONS = {"run", "params", "thresholds", "output"}
OUTPUT_KEYS = {"dir"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int(text: str) -> int:
    t = text.strip().replace("_", "")
    try:
        return int(t)
    except ValueError:
        v = float(t)
        if not v.is_integer():
            raise ValueError(f"not an integer: {text!r}") from None
        return int(v)


def _parse_list(text: str) -> list:
    return [p.strip() for p in text.split(",") if p.strip()]


PARSERS = {
    int: _parse_int,
    float: lambda t: float(t.strip()),
    str: lambda t: t.strip(),
    bool: _parse_bool,
    list: _parse_list,
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    compressor: str = "lz77b"
    params: Dict[str, Any] = field(default_factory=dict)
    thresholds: Thresholds = field(default_factory=Thresholds)
    out_dir: Optional[str] = None
    base_dir: Path = field(default=Path("."), compare=False)

    def canonical(self) -> dict:
        """Everything that influences results (the output location does not)."""
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "compressor": self.compressor,
            "params": {k: self.params[k] for k in sorted(self.params)},
            "thresholds": {f.name: getattr(self.thresholds, f.name) for f in fields(Thresholds)},
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def resolve_path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p


def _typed(schema: dict, key: str, raw: str, where: str):
    kind, _ = schema[key]
    try:
        return PARSERS[kind](raw)
    except ValueError as exc:
        raise InvalidConfig(f"{where}: {key}: {exc}") from None


def parse_config(text: str, base_dir=".", where: str = "<config>") -> ExperimentConfig:
    from .experiments import EXPERIMENTS, get_experiment

    cp = configparser.ConfigParser(interpolation=None, strict=True, default_section="__none__",
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text, source=where)
    except configparser.Error as exc:
        raise InvalidConfig(f"{where}: {exc}") from None
    unknown_sections = set(cp.sections()) - SECTIONS
    if unknown_sections:
        raise InvalidConfig(f"{where}: unknown section(s) {sorted(unknown_sections)}")
    run = dict(cp["run"])
    bad = set(run) - RUN_KEYS
    if bad:
        raise InvalidConfig(f"{where}: unknown key(s) {sorted(bad)}")
    if "experiment" not in run:
        raise InvalidConfig(f"{where}: missing 'experiment' (one of {sorted(EXPERIMENTS)})")
    exp = get_experiment(run["experiment"].strip())
    try:
        seed = _parse_int(run.get("seed", "0"))
    except ValueError as exc:
        raise InvalidConfig(f"{where}: seed: {exc}") from None
    if seed < 0:
        raise InvalidConfig(f"{where}: seed must be non-negative")
    params = {k: default for k, (_, default) in exp.schema.items()}
    if cp.has_section("params"):
        for key, raw in cp["params"].items():
            if key not in exp.schema:
                raise InvalidConfig(f"{where}: unknown parameter {key!r} for {exp.name} "
                                    f"(allowed: {', '.join(sorted(exp.schema))})")
            params[key] = _typed(exp.schema, key, raw, where)
    th_fields = {f.name: f.type for f in fields(Thresholds)}
    th_changes = {}
    if cp.has_section("thresholds"):
        for key, raw in cp["thresholds"].items():
            if key not in th_fields:
                raise InvalidConfig(f"{where}: unknown threshold {key!r}")
            kind = int if key == "n_min" else float
            th_changes[key] = _typed({key: (kind, None)}, key, raw, where)
    out_dir = None
    if cp.has_section("output"):
        bad = set(cp["output"]) - OUTPUT_KEYS
        if bad:
            raise InvalidConfig(f"{where}: unknown output key(s) {sorted(bad)}")
        out_dir = cp["output"].get("dir")
    compressor = run.get("compressor", "lz77b").strip()
    from .complexity import get_compressor

    try:
        get_compressor(compressor)
    except (KeyError, ValueError) as exc:
        raise InvalidConfig(f"{where}: {exc}") from None
    try:
        th = Thresholds().replace(**th_changes)
    except ValueError as exc:
        raise InvalidConfig(f"{where}: thresholds: {exc}") from None
    cfg = ExperimentConfig(exp.name, seed, compressor, params, th, out_dir, Path(base_dir))
    exp.validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent, str(path))
