"""Run configuration: a sectioned TOML document, validated with line-anchored errors.

See ``docs/config.md`` for the schema.  Parsing is delegated to ``tomllib``
(``tomli`` before Python 3.11); everything after that is checked here.
"""

from __future__ import annotations

import inspect
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigSemantic, ConfigSyntax, SturmUniqError
from .operator import BoundaryCondition, Closure, Interval, Operator1D, make_operator
from .numerics import BUDGETS, Numerics, budget

MODES = ("classify", "report", "sweep", "compare", "reduce", "bracket")
TARGETS = ("classify", "report", "reduce")
STRATEGIES = ("auto", "numeric", "all")

# name -> (type, low, high, low inclusive)
NUMERIC_RANGES = {
    "tol": (float, 0.0, 1e-2, False),
    "delta": (float, 0.0, 1e6, False),
    "n_max": (int, 1, 100_000, True),
    "probe_n_max": (int, 1, 100_000, True),
    "rtol": (float, 0.0, 1e-3, False),
    "atol": (float, 0.0, 1e-3, False),
    "L_max": (float, 10.0, 1e12, True),
    "w_max": (float, 1e3, 1e300, True),
    "tol_cross": (float, 0.0, 1.0, False),
    "M_big": (float, 1e3, 1e300, True),
    "K_w": (int, 2, 50, True),
    "eps_conv": (float, 0.0, 0.1, False),
    "depth": (int, 4, 2000, True),
    "extended_depth": (int, 4, 5000, True),
    "sigma_tol": (float, 0.0, 0.1, False),
    "min_decay": (float, 0.0, 10.0, True),
    "stability": (float, 0.0, 1.0, False),
    "contraction": (float, 0.0, 1.0, False),
    "bertrand_tol": (float, 0.0, 0.5, False),
    "min_range": (float, 1.0, 100.0, True),
    "max_panels": (int, 100, 1_000_000, True),
    "max_variation": (float, 0.5, 50.0, True),
    "min_width": (float, 0.0, 1.0, False),
}

OPERATOR_KEYS = {"interval", "closure", "a", "b", "V", "c", "boundary_condition", "params", "random"}
SECTION_KEYS = {
    "classify": {"side", "q", "p", "strategy"},
    "report": {"p", "strategy"},
    "sweep": {"param", "values", "range", "target"},
    "bracket": {"param", "lo", "hi", "width", "target", "max_steps"},
    "compare": {"side", "q"},
    "reduce": {"preset", "params", "interval", "closure", "alpha", "beta", "q", "c", "c1", "c2",
               "provenance", "strategy"},
    "output": {"path", "format"},
}
TOP_KEYS = {"mode", "seed", "jobs", "numerics", "operator", "operator2"} | set(SECTION_KEYS)


def line_of(text: str, table: str | None, key: str | None = None) -> int | None:
    """1-based line of ``key`` inside ``[table]`` (or of the table header)."""
    lines = text.splitlines()
    start = 0
    if table:
        pat = re.compile(r"^\s*\[\s*" + re.escape(table) + r"\s*\]\s*(#.*)?$")
        hit = [i for i, ln in enumerate(lines) if pat.match(ln)]
        if not hit:
            dotted = re.compile(r"^\s*" + re.escape(table.split(".")[-1]) + r"\s*=")
            hit = [i for i, ln in enumerate(lines) if dotted.match(ln)]
            if not hit:
                return None
        start = hit[0]
        if key is None:
            return start + 1
    keypat = re.compile(r"^\s*" + re.escape(key) + r"\s*=") if key else None
    for i in range(start + (1 if table else 0), len(lines)):
        if table and i > start and re.match(r"^\s*\[", lines[i]):
            break
        if keypat and keypat.match(lines[i]):
            return i + 1
    return start + 1 if table else None


def parse_extended(v, what="value") -> float:
    if isinstance(v, bool):
        raise ValueError(f"{what}: expected a number")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        s = v.strip().lower().replace(" ", "")
        if s in ("inf", "+inf", "infinity", "+infinity", "∞"):
            return math.inf
        if s in ("-inf", "-infinity", "-∞"):
            return -math.inf
        try:
            return float(s)
        except ValueError:
            pass
    raise ValueError(f"{what}: cannot read {v!r} as a number")


def parse_interval(v) -> tuple[float, float, Closure | None]:
    """``[x0, y0]`` list, or a string like ``"(0, inf)"`` / ``"[0, 1)"`` that also fixes the closure."""
    if isinstance(v, list):
        if len(v) != 2:
            raise ValueError("interval needs two endpoints")
        return parse_extended(v[0], "x0"), parse_extended(v[1], "y0"), None
    if isinstance(v, str):
        m = re.fullmatch(r"\s*([\[(])\s*([^,]+?)\s*,\s*([^,]+?)\s*([\])])\s*", v)
        if not m:
            raise ValueError(f"interval {v!r} is not of the form (x0, y0)")
        lb, x0, y0, rb = m.groups()
        if lb == "[" and rb == "]":
            raise ValueError("at most one closed end is supported")
        closure = Closure.CLOSED_LEFT if lb == "[" else Closure.CLOSED_RIGHT if rb == "]" else Closure.OPEN
        return parse_extended(x0, "x0"), parse_extended(y0, "y0"), closure
    raise ValueError("interval must be a list or a string")


@dataclass
class OperatorSpec:
    interval: tuple
    closure: Closure
    a: str
    b: str
    V: str
    c: float | None
    boundary_condition: BoundaryCondition
    params: dict
    random: bool = False

    def build(self, overrides: dict | None = None, seed: int | None = None) -> Operator1D:
        if self.random:
            from .random_ops import smooth_operator
            return smooth_operator(np.random.default_rng(0 if seed is None else seed))
        params = dict(self.params)
        params.update(overrides or {})
        x0, y0 = self.interval
        return make_operator(Interval(x0, y0, self.closure), self.a, self.b, self.V, c=self.c,
                             boundary_condition=self.boundary_condition, params=params)

    def to_dict(self):
        if self.random:
            return {"random": True}
        return {
            "interval": [_ext(self.interval[0]), _ext(self.interval[1])],
            "closure": self.closure.value, "a": self.a, "b": self.b, "V": self.V, "c": self.c,
            "boundary_condition": self.boundary_condition.value, "params": self.params,
        }


def _ext(v):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


@dataclass
class RunConfig:
    mode: str
    operator: OperatorSpec | None = None
    operator2: OperatorSpec | None = None
    classify: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    bracket: dict = field(default_factory=dict)
    compare: dict = field(default_factory=dict)
    reduce: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int | None = None
    jobs: int = 1
    raw: dict = field(default_factory=dict)

    def make_numerics(self, budget_name: str = "default") -> Numerics:
        return budget(budget_name).with_overrides(**self.numerics)

    def echo(self) -> dict:
        return _jsonable(self.raw)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if hasattr(v, "isoformat"):
        return v.isoformat()
    return v


class _Checker:
    def __init__(self, text):
        self.text = text

    def fail(self, msg, table=None, key=None):
        raise ConfigSemantic(msg, line_of(self.text, table, key))

    def unknown(self, d, allowed, table):
        for k in d:
            if k not in allowed:
                self.fail(f"unknown key {k!r}" + (f" in [{table}]" if table else ""), table, k)

    def operator(self, d, table) -> OperatorSpec:
        if not isinstance(d, dict):
            self.fail(f"[{table}] must be a table", table)
        self.unknown(d, OPERATOR_KEYS, table)
        if d.get("random"):
            return OperatorSpec((0.0, math.inf), Closure.OPEN, "1", "0", "0", None,
                                BoundaryCondition.NONE, {}, random=True)
        for k in ("interval", "a", "b", "V"):
            if k not in d:
                self.fail(f"[{table}] is missing {k!r}", table)
        try:
            x0, y0, closure = parse_interval(d["interval"])
        except ValueError as exc:
            self.fail(str(exc), table, "interval")
        if "closure" in d:
            try:
                closure = Closure(d["closure"])
            except ValueError:
                self.fail(f"closure must be one of {[c.value for c in Closure]}", table, "closure")
        closure = closure or Closure.OPEN
        try:
            bc = BoundaryCondition(d.get("boundary_condition", "None"))
        except ValueError:
            self.fail(f"boundary_condition must be one of {[b.value for b in BoundaryCondition]}",
                      table, "boundary_condition")
        c = d.get("c")
        if c is not None:
            try:
                c = parse_extended(c, "c")
            except ValueError as exc:
                self.fail(str(exc), table, "c")
        params = d.get("params", {})
        if not isinstance(params, dict):
            self.fail("params must be a table", table, "params")
        for k, v in params.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                self.fail(f"parameter {k!r} must be a number", f"{table}.params", k)
        for k in ("a", "b", "V"):
            if not isinstance(d[k], (str, int, float)) or isinstance(d[k], bool):
                self.fail(f"{k} must be an expression string", table, k)
        return OperatorSpec((x0, y0), closure, str(d["a"]), str(d["b"]), str(d["V"]), c, bc,
                            {k: float(v) for k, v in params.items()})

    def side(self, v, table, allow_both=True):
        s = str(v).strip().lower()
        if s in ("lower", "upper"):
            return s.capitalize()
        if allow_both and s == "both":
            return "both"
        self.fail("side must be Lower, Upper" + (" or both" if allow_both else ""), table, "side")

    def q_of(self, d, table):
        if "q" in d and "p" in d:
            self.fail("give either q or p, not both", table, "p")
        if "p" in d:
            try:
                p = parse_extended(d["p"], "p")
            except ValueError as exc:
                self.fail(str(exc), table, "p")
            if not p > 1:
                self.fail("p must exceed 1 for a boundary classification (p = 1 has its own test in report mode)",
                          table, "p")
            return 1.0 if p == math.inf else p / (p - 1.0)
        q = d.get("q", 1.0)
        try:
            q = parse_extended(q, "q")
        except ValueError as exc:
            self.fail(str(exc), table, "q")
        if not (1.0 <= q < math.inf):
            self.fail("q must be a finite number >= 1", table, "q")
        return q

    def strategy(self, d, table):
        s = d.get("strategy", "auto")
        if s not in STRATEGIES:
            self.fail(f"strategy must be one of {STRATEGIES}", table, "strategy")
        return s

    def number(self, d, key, table, positive=False):
        if key not in d:
            self.fail(f"[{table}] is missing {key!r}", table)
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{key} must be a number", table, key)
        if positive and not v > 0:
            self.fail(f"{key} must be positive", table, key)
        return float(v)


def parse_config(text: str, mode: str | None = None) -> RunConfig:
    """Parse and validate a configuration document.

    ``mode`` (the subcommand) must agree with a ``mode`` key when both are present.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigSyntax(str(exc), int(m.group(1)) if m else None) from None
    ck = _Checker(text)
    ck.unknown(raw, TOP_KEYS, None)
    cfg_mode = raw.get("mode")
    if cfg_mode is not None and cfg_mode not in MODES:
        ck.fail(f"mode must be one of {MODES}", None, "mode")
    if mode is not None and cfg_mode is not None and mode != cfg_mode:
        ck.fail(f"config mode {cfg_mode!r} does not match subcommand {mode!r}", None, "mode")
    mode = mode or cfg_mode
    if mode is None:
        raise ConfigSemantic("no mode given (set mode = ... or use a subcommand)")
    cfg = RunConfig(mode=mode, raw=raw)

    seed = raw.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        ck.fail("seed must be a nonnegative integer", None, "seed")
    cfg.seed = seed
    jobs = raw.get("jobs", 1)
    if isinstance(jobs, bool) or not isinstance(jobs, int) or not 1 <= jobs <= 256:
        ck.fail("jobs must be an integer in [1, 256]", None, "jobs")
    cfg.jobs = jobs

    for table, allowed in SECTION_KEYS.items():
        if table in raw:
            if not isinstance(raw[table], dict):
                ck.fail(f"[{table}] must be a table", None, table)
            ck.unknown(raw[table], allowed, table)

    num = raw.get("numerics", {})
    if not isinstance(num, dict):
        ck.fail("[numerics] must be a table", None, "numerics")
    for k, v in num.items():
        if k not in NUMERIC_RANGES:
            ck.fail(f"unknown numerics key {k!r}", "numerics", k)
        typ, lo, hi, lo_inc = NUMERIC_RANGES[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (typ is int and int(v) != v):
            ck.fail(f"{k} must be {'an integer' if typ is int else 'a number'}", "numerics", k)
        ok = (v >= lo if lo_inc else v > lo) and v <= hi
        if not ok:
            ck.fail(f"{k} = {v} outside the sane range {'[' if lo_inc else '('}{lo}, {hi}]", "numerics", k)
        cfg.numerics[k] = typ(v)
    if "depth" in cfg.numerics and "extended_depth" in cfg.numerics and \
            cfg.numerics["extended_depth"] < cfg.numerics["depth"]:
        ck.fail("extended_depth must be >= depth", "numerics", "extended_depth")

    if "operator" in raw:
        cfg.operator = ck.operator(raw["operator"], "operator")
    if "operator2" in raw:
        cfg.operator2 = ck.operator(raw["operator2"], "operator2")

    target = mode
    if mode in ("sweep", "bracket"):
        sec = raw.get(mode, {})
        target = sec.get("target", "classify")
        if target not in TARGETS:
            ck.fail(f"target must be one of {TARGETS}", mode, "target")
        if mode == "bracket" and target == "report":
            ck.fail("bracket needs a single verdict; use target classify or reduce", mode, "target")
        param = sec.get("param")
        if not isinstance(param, str):
            ck.fail(f"[{mode}] needs a parameter name (param = ...)", mode, "param")
        known = set()
        if target == "reduce":
            known = set(raw.get("reduce", {}).get("params", {}))
            if not known and "preset" in raw.get("reduce", {}):
                from .manifold import PRESETS
                known = set(inspect.signature(PRESETS[raw["reduce"]["preset"]]).parameters) \
                    if raw["reduce"]["preset"] in PRESETS else set()
        elif cfg.operator is not None:
            known = set(cfg.operator.params)
        if mode == "sweep":
            known.add("delta")  # the potential shift, swept as a numerics override
        if param not in known:
            ck.fail(f"{mode} over undefined parameter {param!r}", mode, "param")
        out = {"param": param, "target": target}
        if mode == "sweep":
            if ("values" in sec) == ("range" in sec):
                ck.fail("[sweep] needs exactly one of values or range", mode)
            if "values" in sec:
                vals = sec["values"]
                if not isinstance(vals, list) or not vals or any(
                        isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
                    ck.fail("values must be a nonempty list of numbers", mode, "values")
                out["values"] = [float(v) for v in vals]
            else:
                r = sec["range"]
                if not isinstance(r, dict) or set(r) != {"start", "stop", "num"}:
                    ck.fail("range must be {start, stop, num}", mode, "range")
                num_pts = r["num"]
                if isinstance(num_pts, bool) or not isinstance(num_pts, int) or not 1 <= num_pts <= 10_000:
                    ck.fail("range.num must be an integer in [1, 10000]", mode, "range")
                out["values"] = [float(v) for v in np.linspace(float(r["start"]), float(r["stop"]), num_pts)]
        else:
            lo = ck.number(sec, "lo", mode)
            hi = ck.number(sec, "hi", mode)
            if not lo < hi:
                ck.fail("bracket needs lo < hi", mode, "hi")
            width = ck.number(sec, "width", mode, positive=True) if "width" in sec else (hi - lo) / 64
            steps = sec.get("max_steps", 60)
            if isinstance(steps, bool) or not isinstance(steps, int) or not 1 <= steps <= 1000:
                ck.fail("max_steps must be an integer in [1, 1000]", mode, "max_steps")
            out.update(lo=lo, hi=hi, width=width, max_steps=steps)
        setattr(cfg, mode, out)

    if target in ("classify", "report") or mode == "compare":
        if cfg.operator is None:
            ck.fail(f"{mode} mode needs an [operator] table", None)
    if mode == "compare" and cfg.operator2 is None:
        ck.fail("compare mode needs an [operator2] table", None)

    if target == "classify" or mode == "classify":
        sec = raw.get("classify", {})
        allow_both = mode != "bracket"
        cfg.classify = {
            "side": ck.side(sec.get("side", "both" if allow_both else "Upper"), "classify", allow_both),
            "q": ck.q_of(sec, "classify"),
            "strategy": ck.strategy(sec, "classify"),
        }
    if target == "report" or mode == "report":
        sec = raw.get("report", {})
        ps = sec.get("p", ["inf"])
        if not isinstance(ps, list) or not ps:
            ck.fail("p must be a nonempty list", "report", "p")
        parsed = []
        for p in ps:
            try:
                pv = parse_extended(p, "p")
            except ValueError as exc:
                ck.fail(str(exc), "report", "p")
            if not pv >= 1:
                ck.fail("every p must lie in [1, inf]", "report", "p")
            parsed.append(pv)
        cfg.report = {"p": parsed, "strategy": ck.strategy(sec, "report")}
    if mode == "compare":
        sec = raw.get("compare", {})
        cfg.compare = {"side": ck.side(sec.get("side", "Upper"), "compare", False), "q": ck.q_of(sec, "compare")}
    if target == "reduce" or mode == "reduce":
        cfg.reduce = _reduce_section(ck, raw.get("reduce"))

    out = raw.get("output", {})
    fmt = out.get("format", "json")
    if fmt not in ("json", "text"):
        ck.fail("output.format must be json or text", "output", "format")
    cfg.output = {"path": out.get("path"), "format": fmt}
    return cfg


def _reduce_section(ck: _Checker, sec):
    from .manifold import PRESETS
    if not isinstance(sec, dict):
        ck.fail("reduce mode needs a [reduce] table", None)
    strategy = ck.strategy(sec, "reduce")
    if "preset" in sec:
        if sec["preset"] not in PRESETS:
            ck.fail(f"unknown preset {sec['preset']!r}; choose from {sorted(PRESETS)}", "reduce", "preset")
        extra = set(sec) - {"preset", "params", "strategy"}
        if extra:
            ck.fail(f"preset profiles take only params, got {sorted(extra)}", "reduce", sorted(extra)[0])
        params = sec.get("params", {})
        if not isinstance(params, dict):
            ck.fail("params must be a table", "reduce", "params")
        return {"preset": sec["preset"], "params": dict(params), "strategy": strategy}
    for k in ("interval", "alpha", "beta", "q"):
        if k not in sec:
            ck.fail(f"custom profile is missing {k!r}", "reduce")
    try:
        x0, y0, closure = parse_interval(sec["interval"])
    except ValueError as exc:
        ck.fail(str(exc), "reduce", "interval")
    if "closure" in sec:
        try:
            closure = Closure(sec["closure"])
        except ValueError:
            ck.fail("bad closure", "reduce", "closure")
    prof = {"interval": (x0, y0), "closure": (closure or Closure.OPEN).value,
            "alpha": str(sec["alpha"]), "beta": str(sec["beta"]), "q": str(sec["q"]),
            "provenance": str(sec.get("provenance", "")), "strategy": strategy}
    for k in ("c", "c1", "c2"):
        if k in sec:
            prof[k] = ck.number(sec, k, "reduce")
    return prof


def load_config(path: str, mode: str | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SturmUniqError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, mode)


def valid_budget(name: str) -> str:
    if name not in BUDGETS:
        raise SturmUniqError(f"unknown budget {name!r}; choose from {sorted(BUDGETS)}")
    return name
