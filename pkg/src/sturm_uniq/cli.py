"""Command-line driver: ``sturm-uniq {classify,report,sweep,compare,reduce,bracket} --config PATH``.

Exit codes: 0 when every verdict is conclusive, 2 when some verdict is
Inconclusive, 1 on an error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .classifier import (
    BoundaryClass, Uniqueness, classify_boundary, compare_transfer, uniqueness_report,
)
from .config import MODES, RunConfig, load_config
from .errors import HypothesisFailed, NoFlipInRange, SturmUniqError
from .manifold import RadialProfile, preset, reduce
from .numerics import BUDGETS, Numerics
from .operator import Closure, Interval, Side
from .report import new_document, primary_verdicts, render_text, to_json

BUDGET_ENV = "STURM_UNIQ_BUDGET"
INCONCLUSIVE = {BoundaryClass.INCONCLUSIVE.value, Uniqueness.INCONCLUSIVE.value}


# -- single tasks ------------------------------------------------------------------

def _sides(op, which):
    if which == "both":
        return list(op.open_sides())
    side = Side(which)
    if side not in op.open_sides():
        raise SturmUniqError(f"the {side.value} end of {op.interval.describe()} is closed (regular)")
    return [side]


def _classify(cfg: RunConfig, num: Numerics, overrides=None):
    op = cfg.operator.build(overrides, cfg.seed)
    out = []
    for side in _sides(op, cfg.classify["side"]):
        bv = classify_boundary(op, side, cfg.classify["q"], cfg.classify["strategy"], num)
        out.append({"task": "classify", "operator": op.summary(), "verdict": bv.to_dict()})
    return out


def _report(cfg: RunConfig, num: Numerics, overrides=None):
    op = cfg.operator.build(overrides, cfg.seed)
    rep = uniqueness_report(op, cfg.report["p"], cfg.report["strategy"], num)
    return [{"task": "report", "report": rep.to_dict()}]


def _profile(cfg: RunConfig, overrides=None) -> RadialProfile:
    r = cfg.reduce
    if "preset" in r:
        params = dict(r["params"])
        params.update(overrides or {})
        return preset(r["preset"], params)
    x0, y0 = r["interval"]
    return RadialProfile(Interval(x0, y0, Closure(r["closure"])), r["alpha"], r["beta"], r["q"],
                         c=r.get("c"), c1=r.get("c1"), c2=r.get("c2"), provenance=r["provenance"])


def _reduce(cfg: RunConfig, num: Numerics, overrides=None):
    prof = _profile(cfg, overrides)
    op, rep = reduce(prof, strategy=cfg.reduce["strategy"], numerics=num)
    return [{"task": "reduce", "profile": prof.to_dict(), "operator": op.summary(), "report": rep.to_dict()}]


def _compare(cfg: RunConfig, num: Numerics):
    side = Side(cfg.compare["side"])
    q = cfg.compare["q"]
    op1 = cfg.operator.build(None, cfg.seed)
    op2 = cfg.operator2.build(None, cfg.seed)
    v1 = classify_boundary(op1, side, q, "auto", num)
    res = {"task": "compare", "side": side.value, "op1_verdict": v1.to_dict(), "transfer": None, "direct": None}
    if v1.verdict is not BoundaryClass.NO_ENTRANCE:
        res["transfer_status"] = "not attempted (op1 is not NoEntrance)"
    else:
        try:
            res["transfer"] = compare_transfer(op1, op2, side, v1).to_dict()
            res["transfer_status"] = "transferred"
        except HypothesisFailed as exc:
            res["transfer_status"] = f"refused: {exc}"
    if res["transfer"] is None:
        res["direct"] = classify_boundary(op2, side, q, "auto", num).to_dict()
    return [res]


TASKS = {"classify": _classify, "report": _report, "reduce": _reduce}


def _summary(results) -> str:
    parts = []
    for r in results:
        if r["task"] == "classify":
            parts.append(f"{r['verdict']['side']}:{r['verdict']['verdict']}")
        elif r["task"] in ("report", "reduce"):
            for e in r["report"]["entries"]:
                p = "inf" if e["p"] in ("inf", math.inf) else f"{e['p']:g}"
                parts.append(f"p={p}:{e['verdict']}")
            claim = r["report"].get("annotations", {}).get("manifold_claim")
            if claim:
                parts.append(claim)
    return " ".join(parts)


def _point(cfg: RunConfig, num: Numerics, target: str, param: str, value: float):
    """Evaluate one sweep or bracket point; returns (results, scalar verdict or None)."""
    t0 = time.perf_counter()
    overrides = {param: value}
    if param == "delta":
        num, overrides = num.with_overrides(delta=value), None
    try:
        results = TASKS[target](cfg, num, overrides)
        err = None
    except SturmUniqError as exc:
        results, err = [], f"{type(exc).__name__}: {exc}"
    return results, err, time.perf_counter() - t0


def _scalar_verdict(results) -> str:
    """The single verdict a bracket bisects on."""
    if not results:
        return BoundaryClass.INCONCLUSIVE.value
    r = results[0]
    if r["task"] == "classify":
        return r["verdict"]["verdict"]
    return r["report"]["entries"][0]["verdict"]


def _sweep(cfg: RunConfig, num: Numerics):
    sw = cfg.sweep
    values = sw["values"]
    args = [(cfg, num, sw["target"], sw["param"], v) for v in values]
    if cfg.jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outs = list(pool.map(_point_star, args))  # map keeps config order
    else:
        outs = [_point(*a) for a in args]
    rows = []
    for v, (results, err, dt) in zip(values, outs):
        rows.append({
            "task": "sweep-point", "param": sw["param"], "value": v,
            "summary": _summary(results) if err is None else "error",
            "results": results, "error": err, "wall_clock_s": dt,
        })
    return rows


def _point_star(a):
    return _point(*a)


def bracket_critical(evaluate, lo: float, hi: float, width: float, max_steps: int = 60):
    """Bisect for the flip of ``evaluate`` (value -> verdict string) on ``[lo, hi]``.

    Inconclusive mid-points are collected into an undecided band and the
    bisection continues on both sides of it.  Returns a dict with the final
    bracket ``(lo, hi)``, the band (or None) and every evaluation made.
    """
    steps = []

    def f(x):
        v = evaluate(x)
        steps.append((x, v))
        return v

    vlo, vhi = f(lo), f(hi)
    if vlo in INCONCLUSIVE or vhi in INCONCLUSIVE:
        raise NoFlipInRange(f"endpoint verdicts must be conclusive, got {vlo} at {lo} and {vhi} at {hi}")
    if vlo == vhi:
        raise NoFlipInRange(f"verdict {vlo} at both ends of [{lo}, {hi}]")
    a, b = lo, hi
    band = None
    while b - a > width and len(steps) < max_steps + 2:
        if band is None:
            m = 0.5 * (a + b)
        else:
            left, right = band[0] - a, b - band[1]
            if max(left, right) <= width / 2:
                break
            m = 0.5 * (a + band[0]) if left >= right else 0.5 * (band[1] + b)
        v = f(m)
        if v == vlo:
            a = m
            if band is not None and m >= band[0]:
                band = None if m >= band[1] else (m, band[1])
        elif v == vhi:
            b = m
            if band is not None and m <= band[1]:
                band = None if m <= band[0] else (band[0], m)
        else:
            band = (m, m) if band is None else (min(band[0], m), max(band[1], m))
    return {"lo": a, "hi": b, "verdict_lo": vlo, "verdict_hi": vhi, "inconclusive_band": band,
            "steps": [{"value": x, "verdict": v} for x, v in steps]}


def _bracket(cfg: RunConfig, num: Numerics):
    br = cfg.bracket

    def evaluate(x):
        results, err, _ = _point(cfg, num, br["target"], br["param"], x)
        if err is not None:
            raise SturmUniqError(f"evaluation at {br['param']}={x} failed: {err}")
        return _scalar_verdict(results)

    out = bracket_critical(evaluate, br["lo"], br["hi"], br["width"], br["max_steps"])
    return [{"task": "bracket", "param": br["param"], **out}]


MODE_RUNNERS = {"classify": _classify, "report": _report, "reduce": _reduce,
                "sweep": _sweep, "compare": _compare, "bracket": _bracket}


# -- documents ---------------------------------------------------------------------

def exit_code(doc) -> int:
    results = doc["results"]
    if any(r.get("error") for r in results):
        return 1
    if any(v in INCONCLUSIVE for r in results for v in primary_verdicts(r)):
        return 2
    return 0


def run(cfg: RunConfig, budget_name: str = "default") -> dict:
    """Execute a validated configuration and return the report document."""
    num = cfg.make_numerics(budget_name)
    doc = new_document(cfg.mode, budget_name, cfg.echo(), cfg.seed)
    t0 = time.perf_counter()
    try:
        results = MODE_RUNNERS[cfg.mode](cfg, num)
        for r in results:
            r.setdefault("error", None)
        doc["results"] = results
    except SturmUniqError as exc:
        doc["results"].append({"task": cfg.mode, "error": f"{type(exc).__name__}: {exc}"})
    doc["total_wall_clock_s"] = time.perf_counter() - t0
    doc["exit_code"] = exit_code(doc)
    return doc


def resolve_budget(cli_value: str | None) -> str:
    name = os.environ.get(BUDGET_ENV) or cli_value or "default"
    if name not in BUDGETS:
        raise SturmUniqError(f"unknown budget {name!r}; choose from {sorted(BUDGETS)}")
    return name


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sturm-uniq",
        description="Boundary classification and L^p-uniqueness for a f'' + b f' - V f.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="mode", required=True, metavar="{" + ",".join(MODES) + "}")
    for m in MODES:
        sp = sub.add_parser(m, help=f"run a {m} task")
        sp.add_argument("--config", required=True, metavar="PATH", help="TOML run configuration")
        sp.add_argument("--out", metavar="PATH", help="write the report here")
        sp.add_argument("--format", choices=("json", "text"), help="report format (default: config or json)")
        sp.add_argument("--seed", type=int, help="seed for randomized operators")
        sp.add_argument("--budget", choices=sorted(BUDGETS), help=f"numerical budget (env {BUDGET_ENV} wins)")
        sp.add_argument("--jobs", type=int, help="worker processes for sweeps")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        budget_name = resolve_budget(args.budget)
        cfg = load_config(args.config, args.mode)
        if args.seed is not None:
            if args.seed < 0:
                raise SturmUniqError("--seed must be nonnegative")
            cfg.seed = args.seed
        if args.jobs is not None:
            cfg.jobs = max(1, args.jobs)
        doc = run(cfg, budget_name)
    except SturmUniqError as exc:
        print(f"sturm-uniq: {exc}", file=sys.stderr)
        return 1
    fmt = args.format or cfg.output["format"]
    out = args.out or cfg.output.get("path")
    body = to_json(doc) if fmt == "json" else render_text(doc)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(body)
        sys.stdout.write(render_text(doc))
    else:
        sys.stdout.write(body)
    return doc["exit_code"]


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
