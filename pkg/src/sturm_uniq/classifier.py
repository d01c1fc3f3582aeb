"""Boundary verdicts and L^p-uniqueness reports.

A boundary is classified at an exponent ``q >= 1`` (``q = p/(p-1)``, with
``q = 1`` for ``p = ∞``): it is *no entrance* when ``∫ h^q m'`` diverges
toward it, ``h`` being the normalized Feller solution.  The operator is
L^p-unique iff every open boundary is no entrance; for ``p = 1`` a separate
first-order test applies.

Methods are tried in order: closed-form criteria for recognized families,
the first-order fast path when ``V`` vanishes, then the series probe with
the ODE oracle as cross-check.  Every attempted method is recorded.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    EvaluationError, HypothesisFailed, InvalidOperator, NotApplicable, SturmUniqError,
)
from .numerics import Numerics
from .ode import ode_no_entrance
from .operator import Operator1D, Side, side_grid
from .quadrature import DivergenceVerdict, Outcome, cumulative_log, run_probe
from .series import (
    feller_classical_entrance, log_scale_density, log_speed_density, no_entrance_test, v0_fast_test,
)

DEFAULT = Numerics()


class BoundaryClass(str, enum.Enum):
    NO_ENTRANCE = "NoEntrance"
    ENTRANCE = "Entrance"
    INCONCLUSIVE = "Inconclusive"

    @classmethod
    def from_outcome(cls, outcome: Outcome):
        return {
            Outcome.DIVERGES: cls.NO_ENTRANCE,
            Outcome.CONVERGES: cls.ENTRANCE,
            Outcome.INCONCLUSIVE: cls.INCONCLUSIVE,
        }[outcome]


class Uniqueness(str, enum.Enum):
    UNIQUE = "Unique"
    NOT_UNIQUE = "NotUnique"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class BoundaryVerdict:
    side: Side
    endpoint: float
    q_exponent: float
    verdict: BoundaryClass
    method: str
    feller_classical: bool | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def conclusive(self):
        return self.verdict is not BoundaryClass.INCONCLUSIVE

    def to_dict(self):
        return {
            "side": self.side.value,
            "endpoint": _num(self.endpoint),
            "q_exponent": _num(self.q_exponent),
            "verdict": self.verdict.value,
            "method": self.method,
            "feller_classical": self.feller_classical,
            "diagnostics": self.diagnostics,
        }


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


# -- closed-form criteria -------------------------------------------------------

@dataclass(frozen=True)
class PowerLawParams:
    kappa: float  # a ~ A d^kappa
    gamma: float  # b ~ A gamma d^(kappa-1), oriented away from the boundary
    c: float  # V ~ A c d^(kappa-2)


def power_law_alpha(gamma: float, c: float) -> float:
    """Lower root of ``α² + (γ-1)α - c = 0``: the exponent of the harmonic ``d^α`` blowing up at the boundary."""
    return (-(gamma - 1.0) - math.sqrt((gamma - 1.0) ** 2 + 4.0 * c)) / 2.0


def power_law_flip(q: float, gamma: float, kappa: float = 0.0) -> float | None:
    """The potential constant ``c`` at which ``α q + γ - κ = -1``, or None if no admissible flip exists."""
    a_star = (kappa - 1.0 - gamma) / q
    if a_star > (1.0 - gamma) / 2.0:
        return None  # not a lower root for any c
    c = a_star * a_star + (gamma - 1.0) * a_star
    return c if c >= 0.0 else None


def _fingerprint_points(op, side):
    bm = op.bmap(side)
    ks = np.arange(4, 45)
    ts = bm.probe_t(ks)
    ts = ts[ts <= bm.t_cap()]
    if len(ts) < 8:
        raise NotApplicable("boundary region too short to fingerprint")
    return bm.x(ts)


def _consistent(v, rel=1e-9):
    scale = max(1.0, float(np.max(np.abs(v))))
    return float(np.ptp(v)) <= rel * scale


def recognize_power_law(op: Operator1D, side: Side) -> PowerLawParams:
    """Match ``d^κ (f'' + (γ/d) f' - (c/d²) f)`` near a finite endpoint, ``d`` the distance to it.

    Raises :class:`NotApplicable` when the sampled coefficients do not fit.
    """
    e = op.endpoint(side)
    if not math.isfinite(e):
        raise NotApplicable("power-law family is matched at finite endpoints only")
    xs = _fingerprint_points(op, side)
    try:
        a, b, V = op.coefficients(xs)
    except (EvaluationError, InvalidOperator) as exc:
        raise NotApplicable(str(exc)) from exc
    d = np.abs(xs - e)
    orient = 1.0 if Side(side) is Side.LOWER else -1.0
    logd = np.log(d)
    kappa, lead = np.polyfit(logd, np.log(a), 1)
    if np.max(np.abs(np.log(a) - (kappa * logd + lead))) > 1e-9 * max(1.0, np.max(np.abs(np.log(a)))):
        raise NotApplicable("diffusion is not a power of the distance")
    if abs(kappa - round(kappa)) < 1e-9:
        kappa = float(round(kappa))
    gam = orient * b * d / a
    cc = V * d * d / a
    if not (_consistent(gam) and _consistent(cc)):
        raise NotApplicable("drift or potential is not of the scaled power form")
    return PowerLawParams(float(kappa), float(np.mean(gam)), float(np.mean(cc)))


def recognize_power_law_infinity(op: Operator1D, side: Side) -> PowerLawParams:
    """Match ``f'' + (γ/x) f' - (c/x²) f`` (κ = 0) toward ±∞."""
    e = op.endpoint(side)
    if math.isfinite(e):
        raise NotApplicable("matched at infinite endpoints only")
    xs = _fingerprint_points(op, side)
    try:
        a, b, V = op.coefficients(xs)
    except (EvaluationError, InvalidOperator) as exc:
        raise NotApplicable(str(exc)) from exc
    if not _consistent(a):
        raise NotApplicable("diffusion is not constant")
    gam = b * xs / a
    cc = V * xs * xs / a
    if not (_consistent(gam) and _consistent(cc)):
        raise NotApplicable("drift or potential is not of the power form")
    return PowerLawParams(0.0, float(np.mean(gam)), float(np.mean(cc)))


@dataclass(frozen=True)
class ExactCriterion:
    name: str
    cite: str
    recognize: Callable[[Operator1D, Side], PowerLawParams]
    decide: Callable[[PowerLawParams, float], bool]  # True -> no entrance
    flip: Callable[[PowerLawParams, float], float | None]


def _decide_power_law(p: PowerLawParams, q: float) -> bool:
    alpha = power_law_alpha(p.gamma, p.c)
    return alpha * q + p.gamma - p.kappa <= -1.0


EXACT_CRITERIA: list[ExactCriterion] = [
    ExactCriterion(
        "power_law",
        "Weil/Bessel family x^κ(f'' + (γ/x)f' - (c/x²)f) at a finite endpoint: "
        "no entrance in L^q iff αq + γ - κ <= -1, α = (-(γ-1) - sqrt((γ-1)² + 4c))/2",
        recognize_power_law,
        _decide_power_law,
        lambda p, q: power_law_flip(q, p.gamma, p.kappa),
    ),
    ExactCriterion(
        "power_law_infinity",
        "f'' + (γ/x)f' - (c/x²)f at infinity: the increasing harmonic x^α+ makes "
        "∫ h^q m' diverge for every γ, c >= 0 and q >= 1",
        recognize_power_law_infinity,
        lambda p, q: True,
        lambda p, q: None,
    ),
]


def register_criterion(criterion: ExactCriterion):
    """Add a closed-form criterion; it is tried before the registered ones."""
    EXACT_CRITERIA.insert(0, criterion)


def exact_power_law_criterion(family_params, side=Side.LOWER, q: float = 1.0) -> BoundaryClass:
    """Exact verdict for the power-law family from ``(κ, γ, c)`` or a :class:`PowerLawParams`.

    ``family_params`` may also be an :class:`Operator1D`, which is then
    fingerprinted; non-matching operators raise :class:`NotApplicable`.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if isinstance(family_params, Operator1D):
        side = Side(side)
        for crit in EXACT_CRITERIA:
            try:
                p = crit.recognize(family_params, side)
            except NotApplicable:
                continue
            return BoundaryClass.NO_ENTRANCE if crit.decide(p, q) else BoundaryClass.ENTRANCE
        raise NotApplicable("operator does not match a registered family")
    if isinstance(family_params, dict):
        p = PowerLawParams(float(family_params.get("kappa", 0.0)), float(family_params["gamma"]),
                           float(family_params["c"]))
    elif isinstance(family_params, PowerLawParams):
        p = family_params
    else:
        p = PowerLawParams(*map(float, family_params))
    if p.c < 0:
        raise NotApplicable("potential constant must be nonnegative")
    return BoundaryClass.NO_ENTRANCE if _decide_power_law(p, q) else BoundaryClass.ENTRANCE


# -- numeric classification -----------------------------------------------------

def _safe(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except SturmUniqError as exc:
        return DivergenceVerdict(Outcome.INCONCLUSIVE, growth_diagnostic={"error": f"{type(exc).__name__}: {exc}"})
    except (ArithmeticError, ValueError) as exc:
        return DivergenceVerdict(Outcome.INCONCLUSIVE, growth_diagnostic={"error": f"{type(exc).__name__}: {exc}"})


def combine_routes(series: DivergenceVerdict, ode: DivergenceVerdict):
    """Series verdict unless it is undecided; two conclusive but opposite verdicts give Inconclusive."""
    s, o = series.outcome, ode.outcome
    if s is not Outcome.INCONCLUSIVE and o is not Outcome.INCONCLUSIVE and s is not o:
        return Outcome.INCONCLUSIVE, "conflict"
    if s is not Outcome.INCONCLUSIVE:
        return s, "SeriesProbe"
    return o, "OdeOracle"


def classify_boundary(
    op: Operator1D,
    side=Side.UPPER,
    q_exponent: float = 1.0,
    strategy: str = "auto",
    numerics: Numerics = DEFAULT,
    classical: bool = True,
) -> BoundaryVerdict:
    """Classify the ``side`` endpoint at exponent ``q``.

    ``strategy``: ``"auto"`` stops at the first applicable closed-form
    criterion; ``"numeric"`` skips closed forms; ``"all"`` runs everything and
    reports the closed form (if any) as the verdict.
    """
    side = Side(side)
    q = float(q_exponent)
    if q < 1:
        raise ValueError("q_exponent must be >= 1")
    if strategy not in ("auto", "numeric", "all"):
        raise ValueError(f"unknown strategy {strategy!r}")
    diag = {}
    exact = None
    if strategy != "numeric":
        for crit in EXACT_CRITERIA:
            try:
                p = crit.recognize(op, side)
            except NotApplicable as exc:
                diag.setdefault("exact_not_applicable", {})[crit.name] = str(exc)
                continue
            cls = BoundaryClass.NO_ENTRANCE if crit.decide(p, q) else BoundaryClass.ENTRANCE
            flip = crit.flip(p, q)
            diag["exact"] = {"criterion": crit.name, "cite": crit.cite, "kappa": p.kappa,
                             "gamma": p.gamma, "c": p.c, "flip_c": flip, "verdict": cls.value}
            exact = (crit, cls)
            break

    feller = None
    if classical:
        fc = _safe(feller_classical_entrance, op, side, numerics)
        diag["feller_classical"] = fc.to_dict()
        feller = None if fc.outcome is Outcome.INCONCLUSIVE else fc.outcome is Outcome.CONVERGES

    def verdict(cls, method):
        return BoundaryVerdict(side, op.endpoint(side), q, cls, method, feller, diag)

    if exact is not None and strategy == "auto":
        return verdict(exact[1], f"ExactCriterion({exact[0].name})")

    if op.potential_vanishes(side):
        v0 = _safe(v0_fast_test, op, side, q, numerics)
        diag["v0_fast_path"] = v0.to_dict()
        numeric = (BoundaryClass.from_outcome(v0.outcome), "V0FastPath")
    else:
        sv = _safe(no_entrance_test, op, None, side, q, numerics)
        ov = _safe(ode_no_entrance, op, None, side, q, numerics)
        diag["series"] = sv.to_dict()
        diag["ode"] = ov.to_dict()
        outcome, method = combine_routes(sv, ov)
        numeric = (BoundaryClass.from_outcome(outcome), method if method != "conflict" else "SeriesProbe+OdeOracle")
        if method == "conflict":
            diag["note"] = "series and ODE routes disagree; undetermined, see diagnostics"
    if exact is not None:
        diag["numeric"] = {"verdict": numeric[0].value, "method": numeric[1]}
        return verdict(exact[1], f"ExactCriterion({exact[0].name})")
    return verdict(*numeric)


# -- p = 1 ------------------------------------------------------------------------

@dataclass
class L1Result:
    verdict: Uniqueness
    sides: dict  # side name -> DivergenceVerdict dict

    def to_dict(self):
        return {"verdict": self.verdict.value, "sides": self.sides}


def l1_side_test(op: Operator1D, side, numerics: Numerics = DEFAULT) -> DivergenceVerdict:
    """Probe ``∫ s'(r) ∫_c^r m'(1+V)`` toward ``side``."""
    side = Side(side)

    def build(depth):
        g = side_grid(op, side, depth, settings=numerics.probe.grid)
        inner = cumulative_log(g, log_speed_density(g) + np.log1p(g.values["V"]))
        return g, log_scale_density(g) + inner

    v = run_probe(build, op.bmap(side), numerics.probe)
    v.growth_diagnostic["method"] = "l1_first_order"
    return v


def l1_uniqueness_test(op: Operator1D, numerics: Numerics = DEFAULT) -> L1Result:
    """L¹-uniqueness: the first-order integral must diverge toward every open boundary."""
    sides = {}
    outcomes = []
    for side in op.open_sides():
        v = _safe(l1_side_test, op, side, numerics)
        sides[side.value] = v.to_dict()
        outcomes.append(v.outcome)
    if all(o is Outcome.DIVERGES for o in outcomes):
        res = Uniqueness.UNIQUE
    elif any(o is Outcome.CONVERGES for o in outcomes):
        res = Uniqueness.NOT_UNIQUE
    else:
        res = Uniqueness.INCONCLUSIVE
    return L1Result(res, sides)


# -- comparison -------------------------------------------------------------------

COMPARISON_PROBES = 512


def comparison_points(op: Operator1D, side) -> np.ndarray:
    bm = op.bmap(side)
    if bm.finite:
        ts = np.linspace(0.0, min(60 * math.log(2.0), bm.t_cap()), COMPARISON_PROBES)
    else:
        ts = bm.probe_t(np.linspace(-8.0, 60.0, COMPARISON_PROBES))
        ts = np.concatenate([[0.0], ts[ts > 0]])
    return bm.x(ts)


def check_comparison(op1: Operator1D, op2: Operator1D, side, rel: float = 1e-12):
    """Verify ``a1 >= a2``, ``V2 >= V1`` and the drift ordering between ``c`` and the boundary."""
    side = Side(side)
    xs = comparison_points(op2, side)
    lo, hi = op1.interval.x0, op1.interval.y0
    xs = xs[(xs > lo) & (xs < hi)]
    a1, b1, V1 = op1.coefficients(xs)
    a2, b2, V2 = op2.coefficients(xs)

    def fail(mask, which):
        if mask.any():
            raise HypothesisFailed(float(xs[mask][0]), which)

    fail(a1 < a2 - rel * np.abs(a2), "a1 >= a2")
    fail(V2 < V1 - rel * np.abs(V1), "V2 >= V1")
    r1, r2 = b1 / a1, b2 / a2
    slack = rel * (np.abs(r1) + np.abs(r2))
    if side is Side.UPPER:
        fail(r1 > r2 + slack, "b1/a1 <= b2/a2")
    else:
        fail(r1 < r2 - slack, "b1/a1 >= b2/a2")
    return len(xs)


def compare_transfer(
    op1: Operator1D, op2: Operator1D, side, verdict1: BoundaryVerdict | BoundaryClass | str,
) -> BoundaryVerdict:
    """Carry a no-entrance verdict from ``op1`` to ``op2`` under the comparison hypotheses."""
    side = Side(side)
    v1 = verdict1.verdict if isinstance(verdict1, BoundaryVerdict) else BoundaryClass(verdict1)
    if v1 is not BoundaryClass.NO_ENTRANCE:
        raise ValueError("comparison transfers only a NoEntrance verdict")
    if op1.endpoint(side) != op2.endpoint(side):
        raise ValueError("operators must share the boundary")
    n = check_comparison(op1, op2, side)
    q = verdict1.q_exponent if isinstance(verdict1, BoundaryVerdict) else 1.0
    src = verdict1.method if isinstance(verdict1, BoundaryVerdict) else "given"
    return BoundaryVerdict(side, op2.endpoint(side), q, BoundaryClass.NO_ENTRANCE,
                           f"ComparisonTransfer({src})", None,
                           {"hypotheses_checked_at": n, "source": op1.summary()})


# -- reports ----------------------------------------------------------------------

LIOUVILLE_NOTE = (
    "L-infinity uniqueness holds; hence the L1-Liouville alternative applies: every "
    "integrable harmonic function of the adjoint operator (shifted by lambda) is zero, "
    "or a multiple of the distinguished positive eigenfunction."
)


def q_of_p(p: float) -> float:
    if p == math.inf:
        return 1.0
    if p <= 1:
        raise ValueError("q is defined for p > 1")
    return p / (p - 1.0)


def parse_p(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞", "+inf"):
            return math.inf
        p = float(p)
    p = float(p)
    if not (p >= 1):
        raise ValueError(f"p must lie in [1, inf], got {p}")
    return p


@dataclass
class UniquenessEntry:
    p: float
    verdict: Uniqueness
    boundaries: list  # BoundaryVerdict or L1Result
    note: str | None = None

    def to_dict(self):
        return {
            "p": _num(self.p),
            "verdict": self.verdict.value,
            "boundaries": [b.to_dict() for b in self.boundaries],
            "note": self.note,
        }


@dataclass
class UniquenessReport:
    operator: dict
    entries: list
    liouville_note: str | None = None
    annotations: dict = field(default_factory=dict)

    def entry(self, p) -> UniquenessEntry:
        p = parse_p(p)
        for e in self.entries:
            if e.p == p:
                return e
        raise KeyError(p)

    def to_dict(self):
        return {
            "operator": self.operator,
            "entries": [e.to_dict() for e in self.entries],
            "liouville_note": self.liouville_note,
            "annotations": self.annotations,
        }


def combine_sides(verdicts) -> Uniqueness:
    classes = [v.verdict for v in verdicts]
    if all(c is BoundaryClass.NO_ENTRANCE for c in classes):
        return Uniqueness.UNIQUE
    if any(c is BoundaryClass.ENTRANCE for c in classes):
        return Uniqueness.NOT_UNIQUE
    return Uniqueness.INCONCLUSIVE


def uniqueness_report(
    op: Operator1D, p_list=(math.inf,), strategy: str = "auto", numerics: Numerics = DEFAULT,
) -> UniquenessReport:
    """Per-p uniqueness; half-line operators are judged at their open end only."""
    entries = []
    cache = {}
    for p in p_list:
        p = parse_p(p)
        if p == 1.0:
            res = l1_uniqueness_test(op, numerics)
            entries.append(UniquenessEntry(p, res.verdict, [res]))
            continue
        q = q_of_p(p)
        verdicts = []
        for side in op.open_sides():
            key = (side, q)
            if key not in cache:
                cache[key] = classify_boundary(op, side, q, strategy, numerics)
            verdicts.append(cache[key])
        u = combine_sides(verdicts)
        note = None
        if u is Uniqueness.INCONCLUSIVE:
            note = "undetermined, see diagnostics"
        entries.append(UniquenessEntry(p, u, verdicts, note))
    liouville = None
    if any(e.p == math.inf and e.verdict is Uniqueness.UNIQUE for e in entries):
        liouville = LIOUVILLE_NOTE
    return UniquenessReport(op.summary(), entries, liouville)
