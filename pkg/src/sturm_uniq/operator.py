"""Sturm-Liouville operators ``a f'' + b f' - V f`` and their scale/speed densities.

With ``D(x) = ∫_c^x b/a``, the scale density is ``s'(x) = exp(-D(x))`` and the
speed density is ``m'(x) = exp(D(x)) / a(x)``.  Both are handled through
``D`` only, so they never overflow internally; callers that need the
densities near a boundary should work with their logarithms.

Coefficients are black-box expressions, so validation only sees the values
at the sampled probe points.  Every verdict is relative to that pointwise
representative; almost-everywhere conditions cannot be certified.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EvaluationError, InvalidOperator, NegativePotential, NonpositiveDiffusion,
    PoleAt, QuadratureFailure, ReferencePointOutOfRange,
)
from .expr import CoefficientExpr, parse_coefficient
from .quadrature import (
    BoundaryMap, GridSettings, PanelGrid, build_grid, cumulative, integrate, probe_breaks,
)


class Closure(str, enum.Enum):
    OPEN = "Open"
    CLOSED_LEFT = "ClosedLeft"
    CLOSED_RIGHT = "ClosedRight"


class BoundaryCondition(str, enum.Enum):
    NONE = "None"
    DIRICHLET = "DirichletAtClosed"
    NEUMANN = "NeumannAtClosed"


class Side(str, enum.Enum):
    UPPER = "Upper"  # toward y0
    LOWER = "Lower"  # toward x0

    @property
    def other(self):
        return Side.LOWER if self is Side.UPPER else Side.UPPER


@dataclass(frozen=True)
class Interval:
    x0: float
    y0: float
    closure: Closure = Closure.OPEN

    def __post_init__(self):
        x0, y0 = float(self.x0), float(self.y0)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "closure", Closure(self.closure))
        if math.isnan(x0) or math.isnan(y0) or not x0 < y0:
            raise InvalidOperator(f"interval needs x0 < y0, got ({x0}, {y0})")
        if x0 == math.inf or y0 == -math.inf:
            raise InvalidOperator("interval endpoints out of order")
        if self.closure is Closure.CLOSED_LEFT and not math.isfinite(x0):
            raise InvalidOperator("ClosedLeft requires a finite lower endpoint")
        if self.closure is Closure.CLOSED_RIGHT and not math.isfinite(y0):
            raise InvalidOperator("ClosedRight requires a finite upper endpoint")

    def endpoint(self, side: Side) -> float:
        return self.y0 if Side(side) is Side.UPPER else self.x0

    def contains(self, x) -> bool:
        return self.x0 < x < self.y0

    def default_reference(self) -> float:
        x0, y0 = self.x0, self.y0
        if math.isfinite(x0) and math.isfinite(y0):
            return 0.5 * (x0 + y0)
        if math.isfinite(x0):
            return x0 + 1.0
        if math.isfinite(y0):
            return y0 - 1.0
        return 0.0

    def open_sides(self) -> tuple:
        """Sides whose endpoint is a boundary to classify (closed ends are regular)."""
        if self.closure is Closure.CLOSED_LEFT:
            return (Side.UPPER,)
        if self.closure is Closure.CLOSED_RIGHT:
            return (Side.LOWER,)
        return (Side.LOWER, Side.UPPER)

    def describe(self) -> str:
        lo = "[" if self.closure is Closure.CLOSED_LEFT else "("
        hi = "]" if self.closure is Closure.CLOSED_RIGHT else ")"
        return f"{lo}{_fmt(self.x0)}, {_fmt(self.y0)}{hi}"


def _fmt(v):
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    return repr(v)


@dataclass(frozen=True)
class Operator1D:
    interval: Interval
    a: CoefficientExpr
    b: CoefficientExpr
    V: CoefficientExpr
    c: float
    boundary_condition: BoundaryCondition = BoundaryCondition.NONE
    n_probes: int = 0  # number of points at which the coefficient invariants were checked

    def endpoint(self, side) -> float:
        return self.interval.endpoint(side)

    def bmap(self, side) -> BoundaryMap:
        return BoundaryMap(self.c, self.endpoint(side))

    def open_sides(self):
        return self.interval.open_sides()

    def with_reference(self, c: float) -> "Operator1D":
        return make_operator(self.interval, self.a, self.b, self.V, c, self.boundary_condition)

    def with_potential(self, V) -> "Operator1D":
        return make_operator(self.interval, self.a, self.b, V, self.c, self.boundary_condition)

    def coefficients(self, x):
        """``(a, b, V)`` as arrays at ``x``; raises on poles or invalid values."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a = self.a(x)
        b = self.b(x)
        V = self.V(x)
        bad = a <= 0
        if bad.any():
            raise NonpositiveDiffusion(float(x[bad][0]))
        lossy = a < A_FLOOR
        if lossy.any():
            raise EvaluationError("diffusion coefficient underflows double precision", float(x[lossy][0]))
        bad = V < 0
        if bad.any():
            raise NegativePotential(float(x[bad][0]))
        return a, b, V

    def potential_vanishes(self, side, n=400) -> bool:
        """Whether ``V`` is identically zero between ``c`` and the ``side`` endpoint (sampled)."""
        if self.V.is_zero:
            return True
        bm = self.bmap(side)
        t = np.linspace(0.0, min(bm.t_cap(), 60.0), n)
        try:
            return bool(np.all(self.V(bm.x(t)) == 0.0))
        except EvaluationError:
            return False

    def summary(self) -> dict:
        return {
            "interval": self.interval.describe(),
            "a": self.a.source,
            "b": self.b.source,
            "V": self.V.source,
            "params": dict(self.a.params + self.b.params + self.V.params),
            "c": self.c,
            "boundary_condition": self.boundary_condition.value,
            "validated_at_probes": self.n_probes,
        }


def _as_expr(e, params):
    if isinstance(e, CoefficientExpr):
        return e
    if isinstance(e, (int, float)):
        return parse_coefficient(repr(float(e)))
    return parse_coefficient(e, params)


# below this a(x) has lost most of its significant digits (subnormal range)
A_FLOOR = 1e-300

# probe layout: 64 points in each geometric shell between consecutive probe points
PROBES_PER_SHELL = 64
VALIDATION_SHELLS = 40


def _validate(op: Operator1D) -> int:
    n = 0
    u = (np.arange(PROBES_PER_SHELL) + 0.5) / PROBES_PER_SHELL
    for side in (Side.LOWER, Side.UPPER):
        bm = op.bmap(side)
        shells = bm.probe_t(np.arange(VALIDATION_SHELLS + 1))
        if not bm.finite:
            shells = np.concatenate([[0.0], shells])
        shells = shells[shells <= bm.t_cap()]
        for k, (t1, t2) in enumerate(zip(shells[:-1], shells[1:])):
            xs = bm.x(t1 + (t2 - t1) * u)
            try:
                op.coefficients(xs)
            except PoleAt as exc:
                raise InvalidOperator(f"coefficient has a pole inside the interval at x={exc.x!r}") from exc
            except (NonpositiveDiffusion, NegativePotential):
                raise
            except EvaluationError as exc:
                # overflow far out toward an endpoint bounds the probed region,
                # but the coefficients must be finite near the reference point
                if k < 4:
                    raise InvalidOperator(str(exc)) from exc
                break
            n += len(xs)
    return n


def make_operator(interval, a, b, V, c=None, boundary_condition=None, params=None) -> Operator1D:
    """Build and validate an operator.

    ``a``, ``b``, ``V`` are expression strings or :class:`CoefficientExpr`;
    ``params`` binds free names in string expressions.  Coefficient
    conditions are checked on 64 probes per geometric shell between the
    reference point and each endpoint.
    """
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    a, b, V = (_as_expr(e, params) for e in (a, b, V))
    if c is None:
        c = interval.default_reference()
    c = float(c)
    if not interval.contains(c):
        raise ReferencePointOutOfRange(f"reference point {c} not inside {interval.describe()}")
    bc = BoundaryCondition(boundary_condition or BoundaryCondition.NONE)
    if bc is not BoundaryCondition.NONE and interval.closure is Closure.OPEN:
        raise InvalidOperator("a boundary condition needs a closed endpoint")
    op = Operator1D(interval, a, b, V, c, bc)
    try:
        op.coefficients(np.array([c]))
    except (NonpositiveDiffusion, NegativePotential):
        raise
    except EvaluationError as exc:
        raise InvalidOperator(f"coefficients undefined at the reference point: {exc}") from exc
    n = _validate(op)
    return Operator1D(interval, a, b, V, c, bc, n)


# -- grids toward one boundary ------------------------------------------------

def side_grid(
    op: Operator1D,
    side: Side,
    depth: int,
    delta: float | None = None,
    settings: GridSettings = GridSettings(),
    t_end: float | None = None,
) -> PanelGrid:
    """Panel grid from ``c`` toward the ``side`` endpoint carrying the operator data.

    Nodal values: ``x``, ``logJ`` (log|dx/dt|), ``loga``, ``ratio`` (``(b/a)·dx/dt``),
    ``V`` and ``D`` (``∫_c^x b/a``).  With ``delta`` given, panels are also
    refined so that the growth rate ``sqrt((V+δ)/a)|dx/dt|`` of the Feller
    solution is resolved.
    """
    bm = op.bmap(side)

    def panel(tn):
        xs = bm.x(tn)
        a, b, V = op.coefficients(xs)
        J = bm.jac(tn)
        ratio = b / a * J
        out = {
            "x": xs, "logJ": np.log(np.abs(J)), "loga": np.log(a), "ratio": ratio, "V": V,
            "absratio": np.abs(ratio),
        }
        if delta is not None:
            out["grow"] = np.sqrt((V + delta) / a) * np.abs(J)
        return out

    growth = ("absratio", "grow") if delta is not None else ("absratio",)
    grid = build_grid(
        bm, probe_breaks(bm, depth, settings.subdivide, t_end), panel,
        signed_names=("ratio",), growth_names=growth, settings=settings,
    )
    grid.values["D"] = cumulative(grid, grid.values["ratio"])
    return grid


# -- scale and speed ----------------------------------------------------------

class ScaleSpeedCache:
    """Evaluable ``s'`` and ``m'`` backed by a lazily deepened grid per side.

    Point queries interpolate the nodal drift integral ``D`` spectrally.
    Reads are safe from several threads; grid extension happens under a lock
    and swaps in a complete grid, so readers never see a partial one.
    """

    def __init__(self, op: Operator1D, settings: GridSettings = GridSettings()):
        self.op = op
        self.settings = settings
        self._grids = {}
        self._lock = threading.Lock()

    def _needed_depth(self, bm, t):
        if bm.finite:
            return int(math.ceil(t / math.log(2.0))) + 2
        return int(math.ceil(math.log2(max(math.expm1(min(t, 700.0)), 1.0)))) + 2

    def grid(self, side: Side, t: float = 0.0) -> PanelGrid:
        side = Side(side)
        g = self._grids.get(side)
        if g is not None and (t <= g.t_end or g.truncated):
            return g
        with self._lock:
            g = self._grids.get(side)
            if g is not None and (t <= g.t_end or g.truncated):
                return g
            bm = self.op.bmap(side)
            depth = max(8, self._needed_depth(bm, t), 2 * _depth_of(g))
            g = side_grid(self.op, side, depth, settings=self.settings)
            g.depth = depth
            self._grids[side] = g
            return g

    def drift_integral(self, x):
        """``D(x) = ∫_c^x b/a`` for scalar or array ``x`` inside the interval."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(xs)
        for side, sel in ((Side.UPPER, xs > self.op.c), (Side.LOWER, xs < self.op.c)):
            if not sel.any():
                continue
            bm = self.op.bmap(side)
            ts = bm.t_of(xs[sel])
            if not np.all(np.isfinite(ts)):
                raise EvaluationError("query at the interval endpoint")
            g = self.grid(side, float(ts.max()))
            if ts.max() > g.t_end:
                raise QuadratureFailure(
                    f"drift integral cannot be continued past x={float(bm.x(g.t_end))!r}: {g.truncated}"
                )
            out[sel] = g.interpolate(g.values["D"], ts)
        return float(out[0]) if np.ndim(x) == 0 else out

    def log_s_prime(self, x):
        return -self.drift_integral(x)

    def log_m_prime(self, x):
        return self.drift_integral(x) - np.log(self.op.a(x))

    def s_prime(self, x):
        return np.exp(self.log_s_prime(x))

    def m_prime(self, x):
        return np.exp(self.log_m_prime(x))


def _depth_of(g):
    return getattr(g, "depth", 0) if g is not None else 0


def build_scale_speed(op: Operator1D, settings: GridSettings = GridSettings()) -> ScaleSpeedCache:
    cache = ScaleSpeedCache(op, settings)
    for side in (Side.LOWER, Side.UPPER):
        cache.grid(side)
    return cache


def _check_range(cache, x1, x2):
    iv = cache.op.interval
    if not (iv.x0 <= x1 <= x2 <= iv.y0):
        raise ValueError(f"need x0 <= x1 <= x2 <= y0, got [{x1}, {x2}]")


def _piecewise_integral(cache, density, x1, x2, tol):
    # split at c so each piece lies on one side's grid
    c = cache.op.c
    pieces = [(x1, x2)] if x2 <= c or x1 >= c else [(x1, c), (c, x2)]
    total = 0.0
    for lo, hi in pieces:
        total += integrate(density, lo, hi, tol=tol)[0]
    return total


def scale_integral(cache: ScaleSpeedCache, x1: float, x2: float, tol: float = 1e-10) -> float:
    """``∫_{x1}^{x2} s'``."""
    _check_range(cache, x1, x2)
    if x1 == x2:
        return 0.0
    return _piecewise_integral(cache, cache.s_prime, x1, x2, tol)


def speed_measure(cache: ScaleSpeedCache, x1: float, x2: float, tol: float = 1e-10) -> float:
    """``∫_{x1}^{x2} m'``."""
    _check_range(cache, x1, x2)
    if x1 == x2:
        return 0.0
    return _piecewise_integral(cache, cache.m_prime, x1, x2, tol)
