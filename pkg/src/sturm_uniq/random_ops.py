"""Seed-fixed pseudo-random operators for oracle and invariance checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import power_law_flip
from .operator import Interval, Operator1D, make_operator

INF = math.inf


def _f(v) -> str:
    return repr(float(v))


def smooth_operator(rng: np.random.Generator) -> Operator1D:
    """Bounded polynomial-exponential coefficients on ``(0, ∞)`` or ``ℝ``.

    Coefficients tend to constants at infinity and stay smooth and bounded
    (with ``a`` bounded below) everywhere, so both routes are well posed.
    """
    whole_line = bool(rng.random() < 0.3)
    u = "abs(x)" if whole_line else "x"
    a0, a1, ka = rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.5, 2.0)
    b0, b1, kb = rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0)
    v0, v1, kv = rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.5, 2.0)
    a = f"{_f(a0)} + {_f(a1)}*pow({u}, 2)*exp(-{_f(ka)}*{u})"
    b = f"{_f(b0)} + {_f(b1)}*x*exp(-{_f(kb)}*{u})"
    V = f"{_f(v0)} + {_f(v1)}*pow({u}, 2)*exp(-{_f(kv)}*{u})"
    interval = Interval(-INF, INF) if whole_line else Interval(0.0, INF)
    c = float(rng.uniform(-1.0, 1.0)) if whole_line else float(rng.uniform(0.5, 2.0))
    return make_operator(interval, a, b, V, c=c)


def smooth_operators(seed: int, n: int):
    rng = np.random.default_rng(seed)
    return [smooth_operator(rng) for _ in range(n)]


def quartile_checkpoints(op: Operator1D, side, span: float = 4.0):
    """Quartiles of the stretch from ``c`` toward ``side`` (``span`` long, or up to the endpoint)."""
    e = op.endpoint(side)
    far = e if math.isfinite(e) and abs(e - op.c) <= span else op.c + math.copysign(span, e - op.c)
    if far == e:
        far = op.c + 0.9 * (e - op.c)
    return [op.c + f * (far - op.c) for f in (0.25, 0.5, 0.75, 1.0)]


# -- singular families ----------------------------------------------------------

def weil_operator(gamma: float, c: float, extra_V: str = "0", ref: float = 1.0) -> Operator1D:
    """``f'' + (γ/x) f' - (c/x² + extra) f`` on ``(0, ∞)``."""
    return make_operator(Interval(0.0, INF), "1", f"{_f(gamma)}/x", f"{_f(c)}/pow(x, 2) + {extra_V}", c=ref)


@dataclass(frozen=True)
class FlipCase:
    q: float
    gamma: float
    c_cr: float


def flip_cases(seed: int, n: int, min_c: float = 0.1):
    """``(q, γ)`` with ``q ∈ [1, 4]``, ``γ ∈ (-1, 3]`` whose power-law flip constant is at least ``min_c``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        q = float(rng.uniform(1.0, 4.0))
        g = float(rng.uniform(-2.0, 3.0))
        if g <= -1.0:
            continue
        cc = power_law_flip(q, g)
        if cc is None or cc < min_c:
            continue
        out.append(FlipCase(q, g, cc))
    return out


def invariance_operators(seed: int, n: int):
    """Mixed smooth and power-law operators with two admissible reference points each."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        if i % 2 == 0:
            op = smooth_operator(rng)
        else:
            g = float(rng.uniform(-0.5, 2.5))
            cc = power_law_flip(1.0, g) or 0.0
            # keep away from the flip so both references decide
            c = cc * float(rng.choice([0.4, 2.0])) + float(rng.uniform(0.1, 0.5))
            op = weil_operator(g, c, f"{_f(rng.uniform(0, 1))}*exp(-x)", ref=1.0)
        lo = op.interval.x0
        c2 = op.c + float(rng.uniform(0.5, 2.0)) if not math.isfinite(lo) else op.c * float(rng.uniform(0.3, 3.0))
        out.append((op, c2))
    return out


# -- comparison pairs -------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonPair:
    op1: Operator1D
    op2: Operator1D
    side: str
    violated: str | None  # name of the hypothesis deliberately broken


def _upper_pair(rng, violate=None):
    """Toward +∞: op1 has inward linear drift (no entrance); op2 dominated as required."""
    r = rng.uniform(0.2, 2.0)
    s = rng.uniform(0.1, 0.5)
    w = rng.uniform(0.0, 1.0)
    v = rng.uniform(0.0, 1.0)
    a1 = f"1 + {_f(s)}*exp(-x)"
    b1 = f"-{_f(r)}*x*(1 + {_f(s)}*exp(-x))"
    V1 = f"{_f(v)}*exp(-x)"
    a2 = "1"
    b2 = f"-{_f(r)}*x + {_f(w)}"
    V2 = f"{_f(v)}*exp(-x) + {_f(w)}*pow(x, 2)"
    if violate == "a1 >= a2":
        a2 = f"1 + {_f(2 * s)}*exp(-x) + 0.5"
        b2 = f"(-{_f(r)}*x + {_f(w)})*({a2})"
    elif violate == "V2 >= V1":
        V2 = f"{_f(v)}*exp(-x) * 0.25"
        V1 = f"{_f(v + 0.5)}*exp(-x) + 0.5"
    elif violate is not None:  # drift
        b2 = f"-{_f(r + 1.0)}*x - 1"
    interval = Interval(0.0, INF)
    return (make_operator(interval, a1, b1, V1, c=1.0), make_operator(interval, a2, b2, V2, c=1.0), "Upper")


def _lower_pair(rng, violate=None):
    """Toward 0: op1 is Weil with c1 >= 2 (no entrance at q = 1); op2 dominated as required."""
    g = rng.uniform(-0.5, 0.5)
    c1 = (power_law_flip(1.0, g) or 0.0) + rng.uniform(0.2, 2.0)
    s = rng.uniform(0.0, 0.5)
    a1 = f"1 + {_f(s)}*x"
    b1 = f"{_f(g)}*(1 + {_f(s)}*x)/x"
    V1 = f"{_f(c1)}/pow(x, 2)"
    a2 = "1"
    b2 = f"{_f(g)}/x - {_f(s)}"
    V2 = f"{_f(c1)}/pow(x, 2) + {_f(s)}/x"
    if violate == "a1 >= a2":
        a2 = f"1 + {_f(s + 0.5)}*x + 0.5"
        b2 = f"{_f(g)}*({a2})/x"
    elif violate == "V2 >= V1":
        V2 = f"{_f(c1 * 0.9)}/pow(x, 2)"
    elif violate is not None:
        b2 = f"{_f(g)}/x + 1"
    interval = Interval(0.0, INF)
    return (make_operator(interval, a1, b1, V1, c=1.0), make_operator(interval, a2, b2, V2, c=1.0), "Lower")


def comparison_pairs(seed: int, n_valid: int = 10, n_violating: int = 5):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_valid):
        op1, op2, side = (_upper_pair if i % 2 == 0 else _lower_pair)(rng)
        out.append(ComparisonPair(op1, op2, side, None))
    kinds = ["a1 >= a2", "V2 >= V1", "drift"]
    for i in range(n_violating):
        kind = kinds[i % 3]
        op1, op2, side = (_upper_pair if i % 2 == 0 else _lower_pair)(rng, kind)
        out.append(ComparisonPair(op1, op2, side, kind))
    return out
