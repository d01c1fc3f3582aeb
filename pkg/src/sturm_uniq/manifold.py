"""Radial reduction of elliptic operators on manifolds to the 1-D model.

If ``ρ`` is an exhaustion-type function with

    |∇ρ|² <= α(ρ),    Lρ >= (β(ρ)/α(ρ)) |∇ρ|²,    V >= q(ρ)

on ``[ρ > c]``, then no entrance of the outer boundary for
``α d²/dr² + β d/dr - q`` implies L∞-uniqueness of ``L - V`` on
``C_0^∞(M)``.  Only the 1-D data is checked here; the geometric
inequalities are the caller's responsibility and travel as provenance text.
The implication is one-directional, so an entrance verdict never becomes a
non-uniqueness claim on ``M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidOperator, ParamOutOfRange, UnknownPreset
from .expr import CoefficientExpr, parse_coefficient
from .numerics import Numerics
from .operator import Closure, Interval, Operator1D, make_operator
from .classifier import Uniqueness, UniquenessReport, uniqueness_report

UNIQUE_ON_M = "L-infinity-unique on M"
INAPPLICABLE = "theorem inapplicable"


@dataclass(frozen=True)
class RadialProfile:
    interval: Interval
    alpha: CoefficientExpr
    beta: CoefficientExpr
    q: CoefficientExpr
    c: float | None = None  # one-sided reference point
    c1: float | None = None  # two-sided: drift bound holds on [ρ < c1] and [ρ > c2]
    c2: float | None = None
    provenance: str = ""
    name: str = "custom"

    @property
    def two_sided(self) -> bool:
        return self.c1 is not None

    def __post_init__(self):
        for k in ("alpha", "beta", "q"):
            v = getattr(self, k)
            if not isinstance(v, CoefficientExpr):
                object.__setattr__(self, k, parse_coefficient(str(v)))
        if self.two_sided:
            if self.c2 is None or not (self.interval.x0 < self.c1 < self.c2 < self.interval.y0):
                raise InvalidOperator("two-sided profile needs x0 < c1 < c2 < y0")
            if self.interval.closure is not Closure.OPEN:
                raise InvalidOperator("two-sided profile needs an open interval")
        elif self.c2 is not None:
            raise InvalidOperator("c2 given without c1")

    def reference(self) -> float | None:
        if self.two_sided:
            return 0.5 * (self.c1 + self.c2)
        return self.c

    def operator(self) -> Operator1D:
        """The 1-D model; construction runs the usual coefficient validation."""
        return make_operator(self.interval, self.alpha, self.beta, self.q, c=self.reference())

    def to_dict(self):
        return {
            "name": self.name,
            "interval": self.interval.describe(),
            "alpha": self.alpha.source,
            "beta": self.beta.source,
            "q": self.q.source,
            "c": self.c, "c1": self.c1, "c2": self.c2,
            "provenance": self.provenance,
        }


def _claim(report: UniquenessReport, profile: RadialProfile) -> UniquenessReport:
    entry = report.entries[0]
    claim = UNIQUE_ON_M if entry.verdict is Uniqueness.UNIQUE else INAPPLICABLE
    report.annotations.update(
        manifold_claim=claim,
        profile=profile.to_dict(),
        note=("geometric hypotheses are not machine-checked; the claim rests on the provenance above"),
    )
    if claim != UNIQUE_ON_M:
        report.liouville_note = None
    return report


def reduce_radial(profile: RadialProfile, strategy: str = "auto", numerics: Numerics = Numerics()):
    """One-sided reduction: classify the single open end at ``q = 1``."""
    if profile.two_sided:
        raise InvalidOperator("reduce_radial takes a one-sided profile; use reduce_two_sided")
    op = profile.operator()
    if len(op.open_sides()) != 1:
        raise InvalidOperator("one-sided profile must have exactly one open end (close the other)")
    report = uniqueness_report(op, [math.inf], strategy=strategy, numerics=numerics)
    return op, _claim(report, profile)


def reduce_two_sided(profile: RadialProfile, strategy: str = "auto", numerics: Numerics = Numerics()):
    """Two-sided reduction: both ends must be no entrance for the uniqueness claim."""
    if not profile.two_sided:
        raise InvalidOperator("reduce_two_sided needs c1 < c2")
    op = profile.operator()
    report = uniqueness_report(op, [math.inf], strategy=strategy, numerics=numerics)
    return op, _claim(report, profile)


def reduce(profile: RadialProfile, **kw):
    return (reduce_two_sided if profile.two_sided else reduce_radial)(profile, **kw)


# -- presets ----------------------------------------------------------------------

def _need(cond, msg):
    if not cond:
        raise ParamOutOfRange(msg)


def cartan_hadamard_drift(L: float = 1.0, drift_exp: float = 1.0) -> RadialProfile:
    """``Δ + b·∇`` on a Cartan-Hadamard manifold with ``b·∇d >= -L(1 + d^drift_exp)``."""
    _need(L > 0, "L must be positive")
    _need(drift_exp >= 0, "drift_exp must be >= 0")
    return RadialProfile(
        Interval(0.0, math.inf, Closure.CLOSED_LEFT),
        parse_coefficient("1"),
        parse_coefficient(f"-{L!r}*(1 + pow(x, {drift_exp!r}))"),
        parse_coefficient("0"),
        c=1.0,
        provenance=(
            "rho = d(x) distance to o; |grad d| = 1; Laplacian comparison "
            "'Δd(x) >= (d-1)/d(x) >= 0' on a Cartan-Hadamard manifold; "
            f"b·∇d >= -{L}(1 + d^{drift_exp}) assumed; q = 0"
        ),
        name="cartan_hadamard_drift",
    )


def cartan_hadamard_killing(L: float = 1.0, alpha_exp: float = 3.0, c: float = 4.0) -> RadialProfile:
    """Inward drift ``-L α d^(α-1)`` compensated by killing ``V >= c d^(α-2)``; no entrance iff ``c > L α (α-2)``."""
    _need(L > 0, "L must be positive")
    _need(alpha_exp > 2, "alpha_exp must exceed 2")
    _need(c >= 0, "c must be >= 0")
    return RadialProfile(
        Interval(0.0, math.inf, Closure.CLOSED_LEFT),
        parse_coefficient("1"),
        parse_coefficient(f"-{L * alpha_exp!r}*pow(x, {alpha_exp - 1!r})"),
        parse_coefficient(f"{c!r}*pow(x, {alpha_exp - 2!r})"),
        c=1.0,
        provenance=(
            "rho = d(x) distance to o; Laplacian comparison 'Δd(x) >= (d-1)/d(x)' on a "
            f"Cartan-Hadamard manifold; b·∇d >= -{L}·{alpha_exp}·d^{alpha_exp - 1} and "
            f"V >= {c}·d^{alpha_exp - 2} assumed"
        ),
        name="cartan_hadamard_killing",
    )


def li_schoen_density(alpha_ls: float) -> str:
    """``1/ϱ(r)²`` for ``ϱ = r^-1 (-log r)^-1 (log(-log r))^-α``."""
    return f"pow(x, 2)*pow(log(x), 2)*pow(log(-log(x)), {2 * alpha_ls!r})"


def li_schoen(alpha_ls: float = 0.4, delta: float = math.exp(-3.0)) -> RadialProfile:
    """Conformally flat metric ``ϱ² ds_0²`` near a point of a compact surface; the boundary is ``r = 0``."""
    _need(0 < alpha_ls <= 1, "li_schoen requires 0 < alpha_LS <= 1")
    _need(0 < delta < math.exp(-2.0), "li_schoen requires 0 < delta < e^-2")
    dens = li_schoen_density(alpha_ls)
    return RadialProfile(
        Interval(0.0, delta, Closure.CLOSED_RIGHT),
        parse_coefficient(dens),
        parse_coefficient(f"({dens})/x"),
        parse_coefficient("0"),
        c=delta / 2,
        provenance=(
            "metric ds² = ϱ(r)² (dr² + r² dθ²) with "
            f"ϱ(r) = r^-1 (-log r)^-1 (log(-log r))^-{alpha_ls} on (0, {delta:.6g}]; "
            "rho = r gives |∇r|² = 1/ϱ² and Δr = 1/(r ϱ²)"
        ),
        name="li_schoen",
    )


def unit_ball(d: int = 3, c: float = 2.0) -> RadialProfile:
    """``Δ - V`` on the unit ball of R^d with ``V >= c/(1-|x|)²``."""
    _need(int(d) == d and d >= 2, "d must be an integer >= 2")
    _need(c >= 0, "c must be >= 0")
    return RadialProfile(
        Interval(0.0, 1.0, Closure.CLOSED_LEFT),
        parse_coefficient("1"),
        parse_coefficient("0"),
        parse_coefficient(f"{c!r}/pow(1 - x, 2)"),
        c=0.5,
        provenance=(
            f"rho = |x| in the unit ball of R^{int(d)}; |∇ρ| = 1 and Δρ = (d-1)/r >= 0; "
            f"V(x) >= {c}/(1-|x|)² assumed"
        ),
        name="unit_ball",
    )


def punctured_space(d: int = 3, c: float = 6.0, delta: float = 0.5, two_sided: bool = False) -> RadialProfile:
    """``Δ - V`` on ``R^d \\ {0}`` with ``V >= c/r²`` for ``r < delta``.

    One-sided: the model on ``(0, delta]``, boundary ``0``.  Two-sided: the
    model on ``(0, ∞)`` with ``q = c/r²`` cut off at ``delta``.
    """
    _need(int(d) == d and d >= 2, "d must be an integer >= 2")
    _need(c >= 0, "c must be >= 0")
    _need(delta > 0, "delta must be positive")
    prov = (f"rho = |x| on R^{int(d)} minus the origin; |∇ρ| = 1 and Δρ = (d-1)/r; "
            f"V(x) >= {c}/|x|² for |x| < {delta}")
    beta = parse_coefficient(f"{int(d) - 1}/x")
    if two_sided:
        return RadialProfile(
            Interval(0.0, math.inf),
            parse_coefficient("1"), beta,
            parse_coefficient(f"piecewise({delta!r}, {c!r}/pow(x, 2), 0)"),
            c1=delta / 2, c2=2 * delta, provenance=prov, name="punctured_space",
        )
    return RadialProfile(
        Interval(0.0, delta, Closure.CLOSED_RIGHT),
        parse_coefficient("1"), beta,
        parse_coefficient(f"{c!r}/pow(x, 2)"),
        c=delta / 2, provenance=prov, name="punctured_space",
    )


PRESETS = {
    "cartan_hadamard_drift": cartan_hadamard_drift,
    "cartan_hadamard_killing": cartan_hadamard_killing,
    "li_schoen": li_schoen,
    "unit_ball": unit_ball,
    "punctured_space": punctured_space,
}

_ALIASES = {"alpha_LS": "alpha_ls", "alpha": "alpha_exp"}


def preset(name: str, params: dict | None = None) -> RadialProfile:
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kw = {_ALIASES.get(k, k): v for k, v in (params or {}).items()}
    try:
        return PRESETS[name](**kw)
    except TypeError as exc:
        raise ParamOutOfRange(f"{name}: {exc}") from exc
