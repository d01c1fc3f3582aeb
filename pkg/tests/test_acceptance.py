"""The twelve acceptance criteria, one test each.

A PASS/FAIL line per criterion is printed in the terminal summary (see
``conftest.py``).  Run alone with ``pytest tests/test_acceptance.py``.
"""

import json
import math
import time
from pathlib import Path

import pytest

from sturm_uniq.classifier import (
    BoundaryClass, Uniqueness, classify_boundary, compare_transfer, exact_power_law_criterion,
    l1_uniqueness_test, power_law_flip, uniqueness_report,
)
from sturm_uniq.cli import bracket_critical, run
from sturm_uniq.config import load_config, parse_config
from sturm_uniq.errors import HypothesisFailed
from sturm_uniq.manifold import li_schoen, reduce
from sturm_uniq.ode import ode_no_entrance, sandwich_crosscheck
from sturm_uniq.operator import Interval, Side, make_operator
from sturm_uniq.quadrature import Outcome
from sturm_uniq.random_ops import (
    comparison_pairs, flip_cases, invariance_operators, quartile_checkpoints, smooth_operators, weil_operator,
)
from sturm_uniq.report import to_json, verdict_fields
from sturm_uniq.series import feller_classical_entrance, no_entrance_test, series_sum

INF = math.inf
NE, EN, INC = BoundaryClass.NO_ENTRANCE, BoundaryClass.ENTRANCE, BoundaryClass.INCONCLUSIVE
CONFIGS = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.acceptance


def bessel(gamma):
    return make_operator(Interval(0.0, INF), "1", f"{gamma}/x", "0", c=1.0)


def numeric_flip(q, gamma, lo, hi, width):
    def verdict(c):
        return classify_boundary(weil_operator(gamma, c), Side.LOWER, q, "numeric").verdict.value

    return bracket_critical(verdict, lo, hi, width)


def test_c01_weil_critical_value():
    t0 = time.perf_counter()
    doc = run(load_config(str(CONFIGS / "weil_bracket.toml")))
    res = doc["results"][0]
    assert res["error"] is None
    assert res["hi"] - res["lo"] <= 0.02
    assert res["lo"] <= 0.75 <= res["hi"]
    assert time.perf_counter() - t0 <= 60.0
    assert exact_power_law_criterion((0.0, 0.0, 0.75), Side.LOWER, 2.0) is NE
    assert exact_power_law_criterion((0.0, 0.0, math.nextafter(0.75, 0.0)), Side.LOWER, 2.0) is EN


@pytest.mark.slow
def test_c02_flip_constant_formula():
    cases = [(c.q, c.gamma, c.c_cr) for c in flip_cases(2, 10)]
    cases += [(1.0, d - 1.0, 2.0 * d) for d in (2, 3, 5)]
    for q, g, cc in cases:
        assert cc == pytest.approx((g + 1) ** 2 / q ** 2 - (g * g - 1) / q, rel=1e-12)
        assert power_law_flip(q, g) == pytest.approx(cc, rel=1e-12)
        out = numeric_flip(q, g, 0.5 * cc, 1.5 * cc, 0.02 * cc)
        assert out["inconclusive_band"] is None
        mid = 0.5 * (out["lo"] + out["hi"])
        assert abs(mid - cc) <= 0.05 * cc, (q, g, cc, out["lo"], out["hi"])


def test_c03_bessel_lp_table():
    for g in (-2, -1, 0, 1, 2, 3, 5):
        rep = uniqueness_report(bessel(float(g)), [2.0, INF])
        expect2 = g <= -1 or g >= 3
        expect_inf = g <= -1
        assert (rep.entry(2.0).verdict is Uniqueness.UNIQUE) == expect2, g
        assert (rep.entry(INF).verdict is Uniqueness.UNIQUE) == expect_inf, g
        assert all(e.verdict is not Uniqueness.INCONCLUSIVE for e in rep.entries)


def test_c04_l1_criterion():
    assert l1_uniqueness_test(bessel(0.0)).verdict is Uniqueness.NOT_UNIQUE
    assert l1_uniqueness_test(bessel(1.0)).verdict is Uniqueness.UNIQUE
    for c in (0.01, 0.5, 0.75, 2.0, 10.0):
        assert l1_uniqueness_test(weil_operator(0.0, c)).verdict is Uniqueness.UNIQUE


@pytest.mark.slow
def test_c05_drift_against_killing():
    doc = run(load_config(str(CONFIGS / "drift_killing_sweep.toml")))
    summary = {r["value"]: r["summary"] for r in doc["results"]}
    assert summary == {2.0: "Upper:Entrance", 2.5: "Upper:Entrance",
                       3.5: "Upper:NoEntrance", 4.0: "Upper:NoEntrance"}
    text = (CONFIGS / "drift_killing_sweep.toml").read_text()
    text = text.replace('mode = "sweep"', 'mode = "bracket"')
    text = text.split("[sweep]")[0] + "[bracket]\nparam = \"c\"\nlo = 2.0\nhi = 4.0\nwidth = 0.1\n"
    res = run(parse_config(text))["results"][0]
    assert res["error"] is None
    assert 2.7 <= res["lo"] and res["hi"] <= 3.3


def test_c06_li_schoen_threshold():
    def lower_verdict(alpha):
        return reduce(li_schoen(alpha))[1].entries[0].boundaries[0].verdict

    assert lower_verdict(0.4) is NE
    assert lower_verdict(0.8) is EN
    # borderline band: Inconclusive is allowed, the wrong side is not
    for alpha in (0.45, 0.48):
        assert lower_verdict(alpha) in (NE, INC)
    for alpha in (0.52, 0.55):
        assert lower_verdict(alpha) in (EN, INC)


def test_c07_cosh_identity():
    brownian = make_operator(Interval(-INF, INF), "1", "0", "0", c=0.0)
    for delta in (1.0, 4.0):
        for y in (0.5, 1.0, 2.0):
            assert series_sum(brownian, delta, y) == pytest.approx(math.cosh(math.sqrt(delta) * y), rel=1e-8)


@pytest.mark.slow
def test_c08_series_and_ode_agree():
    for op in smooth_operators(11, 25):
        for side in op.open_sides():
            rep = sandwich_crosscheck(op, 1.0, side, quartile_checkpoints(op, side))
            assert rep.max_discrepancy <= 1e-5, (op.summary(), side)
            s = no_entrance_test(op, side=side).outcome
            o = ode_no_entrance(op, side=side).outcome
            if Outcome.INCONCLUSIVE not in (s, o):
                assert s is o, (op.summary(), side, s, o)


def test_c09_classical_entrance_is_strictly_weaker():
    op = weil_operator(0.0, 1.0)
    assert feller_classical_entrance(op, Side.LOWER).outcome is Outcome.DIVERGES
    v = classify_boundary(op, Side.LOWER, 1.0)
    assert v.verdict is EN
    assert classify_boundary(op, Side.LOWER, 1.0, "numeric").verdict is EN


@pytest.mark.slow
def test_c10_comparison_soundness():
    pairs = comparison_pairs(7)
    transferred = 0
    for pair in pairs:
        v1 = classify_boundary(pair.op1, pair.side, 1.0)
        assert v1.verdict is NE
        if pair.violated is None:
            try:
                out = compare_transfer(pair.op1, pair.op2, pair.side, v1)
            except HypothesisFailed:
                continue
            transferred += 1
            direct = classify_boundary(pair.op2, pair.side, 1.0)
            assert direct.verdict in (out.verdict, INC)
        else:
            with pytest.raises(HypothesisFailed):
                compare_transfer(pair.op1, pair.op2, pair.side, v1)
    assert transferred == 10


@pytest.mark.slow
def test_c11_reference_point_invariance():
    for op, c2 in invariance_operators(5, 10):
        op2 = op.with_reference(c2)
        for side in op.open_sides():
            assert no_entrance_test(op, side=side).outcome is no_entrance_test(op2, side=side).outcome


@pytest.mark.slow
def test_c12_determinism():
    def verdicts():
        out = []
        for f in sorted(CONFIGS.glob("*.toml")):
            doc = json.loads(to_json(run(load_config(str(f)))))
            out.append(json.dumps(verdict_fields(doc)))
        return out

    first, second = verdicts(), verdicts()
    assert len(first) >= 10
    assert first == second
