"""Experiment configuration files.

A config is an INI-style text file read with :mod:`configparser`::

    [experiment]
    kind = strichartz-homog
    seed = 0
    output_dir = out/strichartz

    [model]
    n = 3
    lam = 3.25
    N = 32

    [estimate]
    alpha = 1.5
    p = 4
    q = 4
    t0_list = 4, 8, 16
    T = 4
    ensemble_size = 10

Numbers are decimal (``inf`` is accepted where an exponent may be
infinite) and lists are comma separated.  Every problem is reported as a
:class:`ConfigError` naming the field and, when known, the line.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DskgError
from .estimate_harness import ExponentTriple, admissibility_reason
from .geometry import AlphaChoice, ModelParams

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "EXPERIMENTS"]

EXPERIMENTS = (
    "energy",
    "dispersive",
    "strichartz-homog",
    "strichartz-inhomog",
    "obstruction",
    "semilinear",
    "oracle-suite",
)

_MODEL_KEYS = {"n": int, "lam": float, "a": float, "N": int, "t0": float, "torus_period": float}

# key -> (parser, default); parser "list" means comma separated floats
_ESTIMATE_KEYS = {
    "alpha": ("float", None),
    "p": ("list", None),
    "q": ("list", None),
    "s": ("float", None),
    "eps": ("float", 0.0),
    "t0_list": ("list", None),
    "T": ("float", None),
    "T_list": ("list", None),
    "ensemble_size": ("int", None),
    "refine_N": ("int", None),
    "r": ("float", None),
    "which": ("str", "dtUv"),
    "window": ("list", None),
    "t_range": ("list", None),
    "points": ("int", None),
    "epsilon_ladder": ("list", None),
    "k": ("float", None),
    "per_unit": ("int", None),
}

_TOLERANCE_KEYS = (
    "tolerance", "min_r2", "max_spread", "refine_tolerance", "growth_factor",
    "tail_threshold", "rate_tolerance", "oracle_rtol",
)


class ConfigError(DskgError):
    """Invalid or malformed experiment configuration."""

    def __init__(self, message: str, field_name: str | None = None, line: int | None = None):
        self.field_name = field_name
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field_name is not None:
            where.append(f"field '{field_name}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    params: ModelParams
    alpha: AlphaChoice | None = None
    exponents: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    t0_list: list = field(default_factory=list)
    T: float | None = None
    T_list: list = field(default_factory=list)
    ensemble_size: int | None = None
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    output_dir: str = "dskg-out"

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "params": {
                "n": self.params.n, "lam": self.params.lam, "a": self.params.a,
                "N": self.params.N, "t0": self.params.t0, "torus_period": self.params.torus_period,
            },
            "alpha": None if self.alpha is None else self.alpha.alpha,
            "exponents": [
                {"p": e.p, "q": e.q, "s": e.s, "eps": e.eps} for e in self.exponents
            ],
            "rejected": list(self.rejected),
            "t0_list": list(self.t0_list),
            "T": self.T,
            "T_list": list(self.T_list),
            "ensemble_size": self.ensemble_size,
            "tolerances": dict(self.tolerances),
            "options": dict(self.options),
            "output_dir": self.output_dir,
        }


def _key_lines(text: str) -> dict:
    """Map ``(section, key)`` to the 1-based line where it is set."""
    lines, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = i
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            lines[(section, m.group(1).strip().lower())] = i
    return lines


def _number(raw: str, name: str, line):
    s = raw.strip().lower()
    if s in ("inf", "infinity", "+inf"):
        return math.inf
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"expected a decimal number, got {raw.strip()!r}", name, line) from None


def _integer(raw: str, name: str, line):
    x = _number(raw, name, line)
    if not math.isfinite(x) or x != int(x):
        raise ConfigError(f"expected an integer, got {raw.strip()!r}", name, line)
    return int(x)


def _list(raw: str, name: str, line):
    items = [s for s in (p.strip() for p in raw.split(",")) if s]
    if not items:
        raise ConfigError("expected a comma separated list", name, line)
    return [_number(s, name, line) for s in items]


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    # keys are case sensitive (N vs n)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}", line=getattr(exc, "lineno", None)) from None
    lines = _key_lines(text)

    def line_of(section, key=None):
        return lines.get((section, None if key is None else key.lower()))

    known = {"experiment", "model", "estimate", "tolerances"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]", line=line_of(sec))
    if not cp.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    exp = cp["experiment"]
    for key in exp:
        if key not in ("kind", "seed", "output_dir"):
            raise ConfigError("unknown key in [experiment]", key, line_of("experiment", key))
    kind = exp.get("kind", "").strip()
    if kind not in EXPERIMENTS:
        raise ConfigError(f"kind must be one of {', '.join(EXPERIMENTS)}, got {kind!r}", "kind",
                          line_of("experiment", "kind"))
    if "seed" not in exp:
        raise ConfigError("seed is mandatory", "seed", line_of("experiment"))
    seed = _integer(exp["seed"], "seed", line_of("experiment", "seed"))
    if seed < 0:
        raise ConfigError("seed must be nonnegative", "seed", line_of("experiment", "seed"))
    output_dir = exp.get("output_dir", f"dskg-out/{kind}").strip()

    model_kw = {}
    if cp.has_section("model"):
        for key, raw in cp["model"].items():
            if key not in _MODEL_KEYS:
                raise ConfigError("unknown key in [model]", key, line_of("model", key))
            conv = _integer if _MODEL_KEYS[key] is int else _number
            model_kw[key] = conv(raw, key, line_of("model", key))
    try:
        params = ModelParams(**model_kw)
    except ValueError as exc:
        bad = next((k for k in model_kw if f"{k} must" in str(exc)), None)
        raise ConfigError(str(exc), bad, line_of("model", bad) if bad else line_of("model")) from None

    est = {}
    if cp.has_section("estimate"):
        for key, raw in cp["estimate"].items():
            if key not in _ESTIMATE_KEYS:
                raise ConfigError("unknown key in [estimate]", key, line_of("estimate", key))
            kind_of, _ = _ESTIMATE_KEYS[key]
            ln = line_of("estimate", key)
            if kind_of == "float":
                est[key] = _number(raw, key, ln)
            elif kind_of == "int":
                est[key] = _integer(raw, key, ln)
            elif kind_of == "list":
                est[key] = _list(raw, key, ln)
            else:
                est[key] = raw.strip()
    tolerances = {}
    if cp.has_section("tolerances"):
        for key, raw in cp["tolerances"].items():
            if key not in _TOLERANCE_KEYS:
                raise ConfigError("unknown key in [tolerances]", key, line_of("tolerances", key))
            tolerances[key] = _number(raw, key, line_of("tolerances", key))

    cfg = ExperimentConfig(experiment=kind, seed=seed, params=params, tolerances=tolerances,
                           output_dir=output_dir)
    if "alpha" in est:
        cfg.alpha = AlphaChoice(est.pop("alpha"))
        try:
            cfg.alpha.validate(params.lam, params.n)
        except ValueError as exc:
            raise ConfigError(str(exc), "alpha", line_of("estimate", "alpha")) from None
    for key in ("t0_list", "T_list"):
        if key in est:
            setattr(cfg, key, est.pop(key))
    if "T" in est:
        cfg.T = est.pop("T")
        if not cfg.T > 0:
            raise ConfigError("T must be positive", "T", line_of("estimate", "T"))
    if "ensemble_size" in est:
        cfg.ensemble_size = est.pop("ensemble_size")
        if cfg.ensemble_size < 1:
            raise ConfigError("ensemble_size must be >= 1", "ensemble_size",
                              line_of("estimate", "ensemble_size"))
    ps, qs = est.pop("p", None), est.pop("q", None)
    s_fixed, eps = est.pop("s", None), est.pop("eps", 0.0)
    if (ps is None) != (qs is None):
        missing = "q" if qs is None else "p"
        raise ConfigError("p and q must be given together", missing, line_of("estimate"))
    if ps is not None:
        for p in ps:
            for q in qs:
                reason = admissibility_reason(p, q, params.n)
                if reason is not None:
                    cfg.rejected.append({"p": p, "q": q, "reason": reason})
                    continue
                try:
                    if s_fixed is None:
                        cfg.exponents.append(ExponentTriple.from_scaling(p, q, params.n, eps))
                    else:
                        cfg.exponents.append(ExponentTriple(p, q, s_fixed, eps))
                except ValueError as exc:
                    raise ConfigError(str(exc), "p", line_of("estimate", "p")) from None
    cfg.options = est
    _require(cfg, line_of)
    return cfg


_REQUIRED = {
    "energy": ("alpha", "T", "ensemble_size"),
    "strichartz-homog": ("alpha", "t0_list", "T", "ensemble_size"),
    "strichartz-inhomog": ("alpha", "T_list", "ensemble_size"),
    "semilinear": ("epsilon_ladder",),
}


def _require(cfg: ExperimentConfig, line_of):
    for name in _REQUIRED.get(cfg.experiment, ()):
        value = cfg.options.get(name, getattr(cfg, name, None))
        if value is None or value == []:
            raise ConfigError(f"required for kind = {cfg.experiment}", name, line_of("estimate"))
    if cfg.experiment.startswith("strichartz") and not (cfg.exponents or cfg.rejected):
        raise ConfigError(f"p and q are required for kind = {cfg.experiment}", "p",
                          line_of("estimate"))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
