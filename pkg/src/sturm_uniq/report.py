"""Report documents: a JSON object model plus a plain-text summary."""

from __future__ import annotations

import json
import math

from . import __version__

SCHEMA_VERSION = 1
VOLATILE_KEYS = {"wall_clock_s", "total_wall_clock_s"}


def new_document(mode: str, budget: str, config_echo: dict, seed) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "sturm-uniq",
        "version": __version__,
        "mode": mode,
        "budget": budget,
        "seed": seed,
        "config": config_echo,
        "results": [],
        "exit_code": None,
    }


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):  # numpy scalars
        try:
            v = v.item()
        except (TypeError, ValueError):
            pass
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
    if hasattr(v, "value") and not isinstance(v, (int, float, str, bool)):  # enums
        return v.value
    return v


def to_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=False, ensure_ascii=False) + "\n"


def strip_volatile(doc):
    """Copy of ``doc`` without wall-clock fields, for determinism comparisons."""
    if isinstance(doc, dict):
        return {k: strip_volatile(v) for k, v in doc.items() if k not in VOLATILE_KEYS}
    if isinstance(doc, list):
        return [strip_volatile(v) for v in doc]
    return doc


def verdict_fields(doc) -> list:
    """Every ``verdict``/``outcome``/``manifold_claim`` value with its path, in document order."""
    out = []

    def walk(v, path):
        if isinstance(v, dict):
            for k, x in v.items():
                if k in ("verdict", "outcome", "manifold_claim") and isinstance(x, str):
                    out.append((path + "/" + k, x))
                else:
                    walk(x, path + "/" + k)
        elif isinstance(v, list):
            for i, x in enumerate(v):
                walk(x, f"{path}/{i}")

    walk(doc, "")
    return out


def primary_verdicts(result: dict) -> list:
    """The headline verdicts of one result entry (diagnostic sub-verdicts excluded)."""
    task = result.get("task")
    if task == "classify":
        return [result["verdict"]["verdict"]]
    if task in ("report", "reduce"):
        return [e["verdict"] for e in result["report"]["entries"]]
    if task == "sweep-point":
        return [v for r in result.get("results", []) for v in primary_verdicts(r)]
    if task == "compare":
        final = result.get("transfer") or result.get("direct")
        return [final["verdict"]] if final else []
    if task == "bracket":
        return ["Inconclusive"] if result.get("inconclusive_band") else [result["verdict_lo"], result["verdict_hi"]]
    return []


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.6g}"
    return str(v)


def _boundary_line(bv: dict) -> str:
    extra = ""
    if bv.get("feller_classical") is not None:
        extra = f"  classical-entrance={'yes' if bv['feller_classical'] else 'no'}"
    return (f"{bv['side']:<5} (endpoint {_fmt(bv['endpoint'])})  q={_fmt(bv['q_exponent'])}  "
            f"{bv['verdict']:<12} via {bv['method']}{extra}")


def _report_lines(rep: dict, indent="  "):
    lines = []
    for e in rep["entries"]:
        p = "inf" if e["p"] in ("inf", math.inf) else _fmt(e["p"])
        lines.append(f"{indent}p={p:<5} {e['verdict']}" + (f"  ({e['note']})" if e.get("note") else ""))
        for b in e["boundaries"]:
            if "side" in b:
                lines.append(f"{indent}    {_boundary_line(b)}")
            else:
                for side, v in b.get("sides", {}).items():
                    lines.append(f"{indent}    {side:<5} first-order integral {v['outcome']}")
    if rep.get("liouville_note"):
        lines.append(f"{indent}note: {rep['liouville_note']}")
    ann = rep.get("annotations") or {}
    if "manifold_claim" in ann:
        lines.append(f"{indent}manifold: {ann['manifold_claim']}")
    return lines


def _methods_line(bv: dict, indent):
    d = bv.get("diagnostics", {})
    tried = []
    for key in ("exact", "v0_fast_path", "series", "ode", "feller_classical", "numeric"):
        if key in d:
            val = d[key]
            res = val.get("verdict") or val.get("outcome")
            rule = (val.get("growth_diagnostic") or {}).get("rule") if isinstance(val, dict) else None
            tried.append(f"{key}={res}" + (f"[{rule}]" if rule else ""))
    return f"{indent}    tried: " + ", ".join(tried) if tried else None


def render_text(doc: dict) -> str:
    lines = [f"sturm-uniq {doc['version']}  mode={doc['mode']}  budget={doc['budget']}"]
    for r in doc["results"]:
        task = r.get("task")
        if r.get("error"):
            lines.append(f"[{task}] error: {r['error']}")
            continue
        if task == "classify":
            bv = r["verdict"]
            lines.append(f"[classify] {_boundary_line(bv)}")
            m = _methods_line(bv, "")
            if m:
                lines.append(m)
        elif task in ("report", "reduce"):
            head = f"[{task}]"
            if task == "reduce":
                head += f" {r['profile']['name']} on {r['profile']['interval']}"
            lines.append(head)
            lines.extend(_report_lines(r["report"]))
        elif task == "sweep-point":
            lines.append(f"[sweep] {r['param']}={_fmt(r['value'])}  {r['summary']}")
        elif task == "compare":
            lines.append(f"[compare] side={r['side']}  op1: {r['op1_verdict']['verdict']}  "
                         f"transfer: {r['transfer_status']}")
            if r.get("transfer"):
                lines.append(f"    op2 {_boundary_line(r['transfer'])}")
            if r.get("direct"):
                lines.append(f"    op2 direct {_boundary_line(r['direct'])}")
        elif task == "bracket":
            band = r.get("inconclusive_band")
            lines.append(f"[bracket] {r['param']} flip in [{_fmt(r['lo'])}, {_fmt(r['hi'])}]  "
                         f"({r['verdict_lo']} -> {r['verdict_hi']}, {len(r['steps'])} evaluations)"
                         + (f"  undecided on [{_fmt(band[0])}, {_fmt(band[1])}]" if band else ""))
    code = doc.get("exit_code")
    meaning = {0: "all verdicts conclusive", 1: "error", 2: "some verdicts inconclusive"}.get(code, "")
    lines.append(f"exit {code}: {meaning}")
    return "\n".join(lines) + "\n"
