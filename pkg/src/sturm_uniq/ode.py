"""Feller's equation ``(h'/s')' = m'(V+δ) h`` solved directly, as an oracle for the series.

With ``h(c) = 1``, ``h'(c) = 0`` the solution equals the sum of the iterated
integrals.  It grows like an exponential of an exponential in the cases of
interest, so the solver works with ``L = log h`` in the boundary coordinate
``t`` of :class:`~sturm_uniq.quadrature.BoundaryMap` (``x = x(t)``,
``J = dx/dt``, ``κ = J'/J``).  The state is ``(L, v, D)`` with ``v = dL/dt``::

    L' = v
    v' = J² (V+δ)/a − (b/a) J v − v² + κ v
    D' = (b/a) J

``v`` is the Riccati variable ``w = h'/(s' h)`` rescaled by ``s' J``.  The
system is stiff near boundaries (``v`` relaxes fast to its quasi-equilibrium),
hence an implicit solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import EvaluationError, InvalidOperator, StepSizeUnderflow
from .numerics import Numerics
from .operator import Operator1D, Side
from .quadrature import (
    DivergenceVerdict, Outcome, PanelGrid, build_grid, judge_grid, probe_breaks, run_probe,
)
from .series import compute_series, log_speed_density

DEFAULT = Numerics()


@dataclass
class SolutionTrace:
    op: Operator1D
    delta: float
    side: Side
    grid: PanelGrid  # panels fully covered by the integration
    L: np.ndarray  # log h on the grid nodes, shape (P, 17)
    v: np.ndarray  # dL/dt on the grid nodes
    D: np.ndarray  # drift integral carried by the solver
    step_controller_stats: dict = field(default_factory=dict)
    termination: str = "boundary"

    @property
    def t(self):
        return self.grid.t

    @property
    def x(self):
        return self.grid.values["x"]

    @property
    def w(self):
        """Riccati variable ``h'/(s'h)``."""
        J = self.grid.bmap.jac(self.grid.t)
        with np.errstate(over="ignore"):
            return self.v * np.exp(self.D) / J

    def log_h_at(self, y):
        t = self.grid.bmap.t_of(y)
        return float(self.grid.interpolate(self.L, t)[0])


def _rhs_factory(op, bm, delta):
    kappa = -1.0 if bm.finite else 1.0

    def coeffs(t):
        x = bm.x(np.array([t]))
        a, b, V = op.coefficients(x)
        J = float(bm.jac(t))
        return float(a[0]), float(b[0]), float(V[0]), J

    def rhs(t, y):
        a, b, V, J = coeffs(t)
        L, v, D, E = y
        r = b / a * J
        return [v, J * J * (V + delta) / a - r * v - v * v + kappa * v, r, v + r]

    return rhs


def _integrate(rhs, t_end, numerics, events):
    stats = {}
    last = None
    for method in ("LSODA", "Radau"):
        try:
            sol = solve_ivp(
                rhs, (0.0, t_end), [0.0, 0.0, 0.0, 0.0], method=method, dense_output=True,
                rtol=numerics.rtol, atol=numerics.atol, events=events,
            )
        except (EvaluationError, InvalidOperator) as exc:
            last = exc
            continue
        stats = {"method": method, "nfev": int(sol.nfev), "njev": int(sol.njev),
                 "nlu": int(sol.nlu), "n_steps": int(len(sol.t) - 1), "status": int(sol.status),
                 "message": sol.message}
        if sol.status >= 0:
            return sol, stats
        last = sol
    return last, stats


def evaluable_end(op, bm, t_end, samples=4096):
    """Largest ``t <= t_end`` up to which the coefficients evaluate on a fine scan."""
    while t_end > 0:
        ts = np.linspace(0.0, t_end, samples + 1)
        try:
            op.coefficients(bm.x(ts))
            return t_end
        except (EvaluationError, InvalidOperator) as exc:
            bad = getattr(exc, "x", None)
            if bad is None:
                t_end = ts[samples // 2]
                continue
            tb = float(bm.t_of(bad))
            ok = ts[ts < tb]
            t_end = float(ok[-1]) if len(ok) > 1 else 0.0
    return 0.0


def _target_end(bm, depth):
    t = float(bm.probe_t(depth))
    return min(t, bm.t_cap())


def feller_solution(
    op: Operator1D,
    delta: float | None = None,
    side=Side.UPPER,
    numerics: Numerics = DEFAULT,
    depth: int | None = None,
    t_end: float | None = None,
    q: float = 1.0,
) -> SolutionTrace:
    """Integrate ``(L, v, D)`` from ``c`` toward the ``side`` endpoint.

    Stops at the end of the probe range, when ``L`` exceeds ``L_max`` or when
    ``|v|`` exceeds ``w_max``.  The solution is then sampled on panels refined
    until ``h^q m'`` (and ``v``) are resolved.  Raises
    :class:`StepSizeUnderflow` (with the partial trace attached) when both
    solvers fail.
    """
    side = Side(side)
    delta = numerics.delta if delta is None else delta
    if delta <= 0:
        raise ValueError("delta must be positive")
    depth = numerics.probe.depth if depth is None else depth
    bm = op.bmap(side)
    target = _target_end(bm, depth) if t_end is None else float(t_end)
    span = evaluable_end(op, bm, target)
    if span <= 0:
        raise StepSizeUnderflow("coefficients cannot be evaluated next to the reference point")
    rhs = _rhs_factory(op, bm, delta)

    def big_L(t, y):
        return numerics.L_max - y[0]

    def big_v(t, y):
        return numerics.w_max - abs(y[1])

    big_L.terminal = big_v.terminal = True
    sol, stats = _integrate(rhs, span, numerics, [big_L, big_v])
    if isinstance(sol, Exception) or sol is None or getattr(sol, "sol", None) is None:
        raise StepSizeUnderflow(f"ODE integration failed: {sol}", None)
    reached = float(sol.t[-1])
    termination = "boundary" if span >= target else f"coefficients not evaluable past t={span:.6g}"
    if sol.status == 1:
        termination = "L_max" if sol.t_events[0].size else "w_max"
    elif sol.status < 0:
        termination = f"solver failure: {sol.message}"
    dense = sol.sol

    def panel(tn):
        tn = np.clip(tn, 0.0, reached)
        xs = bm.x(tn)
        a, b, V = op.coefficients(xs)
        L, v, D, E = dense(tn)
        logJ = np.log(np.abs(bm.jac(tn)))
        loga = np.log(a)
        # E = L + D is carried by the solver so that h·m' keeps its accuracy
        # when L and -D are both huge
        g1 = E - loga + logJ
        return {"x": xs, "logJ": logJ, "loga": loga, "ratio": b / a * bm.jac(tn), "V": V,
                "L": L, "v": v, "D": D, "E": E, "g1": g1, "gq": g1 + (q - 1.0) * L}

    breaks = probe_breaks(bm, max(depth, 1), numerics.probe.grid.subdivide, t_end=reached)
    if reached <= 0 or len(breaks) < 2:
        raise StepSizeUnderflow("ODE integration made no progress")
    # sampling the dense output only needs to be as fine as the solver is accurate
    gset = replace(numerics.probe.grid, tol=max(numerics.probe.grid.tol, 100.0 * numerics.rtol))
    grid = build_grid(bm, breaks, panel, log_names=("g1", "gq"), settings=gset)
    if grid.truncated:
        termination = f"{termination}; grid: {grid.truncated}"
    elif reached < target:
        grid.truncated = f"ODE stopped at t={reached:.6g} ({termination})"
    trace = SolutionTrace(op, delta, side, grid, grid.values["L"], grid.values["v"], grid.values["D"],
                          stats, termination)
    if sol.status < 0:
        raise StepSizeUnderflow(f"ODE integration failed at t={reached:.6g}: {sol.message}", trace)
    return trace


def riccati_residual(trace: SolutionTrace) -> float:
    """Largest relative mismatch of ``dv/dt`` against the right-hand side, by spectral differentiation."""
    from numpy.polynomial import chebyshev as C
    from .quadrature import NODES

    g = trace.grid
    bm = g.bmap
    kappa = -1.0 if bm.finite else 1.0
    J = bm.jac(g.t)
    a = np.exp(g.values["loga"])
    r = g.values["ratio"]
    rhs = J * J * (g.values["V"] + trace.delta) / a - r * trace.v - trace.v ** 2 + kappa * trace.v
    worst = 0.0
    for p in range(g.n_panels):
        coef = C.chebfit(NODES, trace.v[p], len(NODES) - 1)
        dv = C.chebval(NODES, C.chebder(coef)) / g.half[p]
        scale = np.abs(rhs[p]).max() + np.abs(trace.v[p]).max() + 1e-300
        worst = max(worst, float(np.abs(dv - rhs[p]).max() / scale))
    return worst


def l1m_integrability(trace: SolutionTrace, q: float = 1.0, numerics: Numerics = DEFAULT) -> DivergenceVerdict:
    """Probe ``∫ h^q m'`` along a computed trace; Diverges means no entrance."""
    g = trace.grid
    logg = g.values["g1"] + (q - 1.0) * trace.L
    v = judge_grid(g, logg, numerics.probe)
    v.growth_diagnostic.update(method="ode", termination=trace.termination, delta=trace.delta,
                               solver=trace.step_controller_stats.get("method"))
    return v


def ode_no_entrance(
    op: Operator1D, delta: float | None = None, side=Side.UPPER, q: float = 1.0,
    numerics: Numerics = DEFAULT,
) -> DivergenceVerdict:
    """ODE route to the no-entrance test, deepening the probe when undecided."""
    side = Side(side)

    def build(depth):
        try:
            tr = feller_solution(op, delta, side, numerics, depth=depth, q=q)
        except StepSizeUnderflow as exc:
            if exc.trace is None:
                raise
            tr = exc.trace
        build.trace = tr
        return tr.grid, tr.grid.values["gq"]

    try:
        v = run_probe(build, op.bmap(side), numerics.probe)
    except StepSizeUnderflow as exc:
        return DivergenceVerdict(Outcome.INCONCLUSIVE, growth_diagnostic={"method": "ode", "error": str(exc)})
    v.growth_diagnostic.update(method="ode", termination=build.trace.termination,
                               solver=build.trace.step_controller_stats.get("method"))
    return v


@dataclass
class CrosscheckReport:
    rows: list  # (y, series value, ode value, relative discrepancy)
    tol_cross: float
    max_discrepancy: float
    flagged: list

    @property
    def ok(self):
        return not self.flagged

    def to_dict(self):
        return {
            "rows": [list(map(float, r)) for r in self.rows],
            "tol_cross": self.tol_cross,
            "max_discrepancy": self.max_discrepancy,
            "flagged": [float(y) for y in self.flagged],
        }


def sandwich_crosscheck(
    op: Operator1D, delta: float | None, side, checkpoints, numerics: Numerics = DEFAULT,
) -> CrosscheckReport:
    """Compare the series sum with ``exp(L)`` from the ODE at each checkpoint."""
    side = Side(side)
    delta = numerics.delta if delta is None else delta
    bm = op.bmap(side)
    ys = np.asarray(checkpoints, dtype=float)
    ts = bm.t_of(ys)
    t_top = float(np.max(ts))
    rows = []
    if t_top > 0:
        st = compute_series(op, delta, side, t_end=t_top, tol=numerics.tol, n_max=numerics.probe_n_max,
                            numerics=numerics, depth=_depth_covering(bm, t_top))
        tr = feller_solution(op, delta, side, numerics, t_end=t_top, depth=_depth_covering(bm, t_top))
    for y, t in zip(ys, ts):
        if t == 0:
            rows.append((y, 1.0, 1.0, 0.0))
            continue
        ls = float(st.grid.interpolate(st.log_sum, t)[0])
        lo = float(tr.grid.interpolate(tr.L, t)[0]) if t <= tr.grid.t_end else np.nan
        rel = abs(np.expm1(lo - ls)) if np.isfinite(lo) else np.inf
        rows.append((y, np.exp(ls), np.exp(lo), rel))
    worst = max((r[3] for r in rows), default=0.0)
    flagged = [r[0] for r in rows if not r[3] <= numerics.tol_cross]
    return CrosscheckReport(rows, numerics.tol_cross, float(worst), flagged)


def _depth_covering(bm, t):
    if bm.finite:
        return int(np.ceil(t / np.log(2.0))) + 1
    return int(np.ceil(np.log2(max(np.expm1(min(t, 700.0)), 1.0)))) + 1
