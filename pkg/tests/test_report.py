import json
import math

import numpy as np

from sturm_uniq.operator import Side
from sturm_uniq.report import (
    new_document, primary_verdicts, render_text, strip_volatile, to_json, verdict_fields,
)


def doc_with(results):
    doc = new_document("classify", "default", {"mode": "classify"}, None)
    doc["results"] = results
    doc["exit_code"] = 0
    doc["total_wall_clock_s"] = 1.25
    return doc


def test_json_encodes_infinities_numpy_and_enums():
    doc = doc_with([{"task": "classify", "x": math.inf, "y": -math.inf, "z": math.nan,
                     "n": np.float64(0.5), "k": np.int64(3), "side": Side.LOWER, "t": (1, 2)}])
    back = json.loads(to_json(doc))["results"][0]
    assert (back["x"], back["y"], back["z"]) == ("inf", "-inf", "nan")
    assert (back["n"], back["k"], back["side"], back["t"]) == (0.5, 3, "Lower", [1, 2])


def test_strip_volatile_removes_timings_only():
    doc = doc_with([{"task": "sweep-point", "wall_clock_s": 3.0, "summary": "x"}])
    clean = strip_volatile(doc)
    assert "total_wall_clock_s" not in clean
    assert clean["results"] == [{"task": "sweep-point", "summary": "x"}]
    assert doc["total_wall_clock_s"] == 1.25  # original untouched


def test_verdict_fields_are_ordered_paths():
    doc = doc_with([{"task": "classify", "verdict": {"verdict": "Entrance",
                                                     "diagnostics": {"series": {"outcome": "Converges"}}}}])
    assert verdict_fields(doc) == [
        ("/results/0/verdict/verdict", "Entrance"),
        ("/results/0/verdict/diagnostics/series/outcome", "Converges"),
    ]


def test_primary_verdicts():
    rep = {"task": "report", "report": {"entries": [{"verdict": "Unique"}, {"verdict": "NotUnique"}]}}
    assert primary_verdicts(rep) == ["Unique", "NotUnique"]
    sweep = {"task": "sweep-point", "results": [rep]}
    assert primary_verdicts(sweep) == ["Unique", "NotUnique"]
    cmp_ = {"task": "compare", "transfer": None, "direct": {"verdict": "Entrance"}}
    assert primary_verdicts(cmp_) == ["Entrance"]


def test_text_rendering_mentions_mode_and_exit():
    doc = doc_with([{"task": "bracket", "param": "c", "lo": 0.7, "hi": 0.75, "verdict_lo": "Entrance",
                     "verdict_hi": "NoEntrance", "inconclusive_band": None, "steps": [{}, {}], "error": None}])
    text = render_text(doc)
    assert "mode=classify" in text
    assert "exit 0" in text
    assert "0.7" in text and "0.75" in text
