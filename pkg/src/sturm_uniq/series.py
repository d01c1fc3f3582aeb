"""Iterated integrals of Feller type and the no-entrance tests built on them.

For a side of the reference point ``c`` the iterated integrals are

    I_0 = 1,   I_n(y) = ∫_c^y s'(r) ∫_c^r m'(t) (V(t) + δ) I_{n-1}(t) dt dr

(``J_n`` is the mirror image toward the lower endpoint; there both
integrals run from ``y`` up to ``c``).  Their sum is the solution ``h`` of
``(h'/s')' = m'(V+δ) h`` with ``h(c) = 1``, ``h'(c) = 0``.  A boundary is
"no entrance" when ``∫ (Σ I_n) m'`` diverges toward it.

All levels are computed on one shared panel grid, one cumulative sweep per
integral, in log space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationBudgetExceeded
from .numerics import Numerics
from .operator import Operator1D, Side, side_grid
from .quadrature import DivergenceVerdict, Outcome, PanelGrid, cumulative_log, judge_grid, probe_values, run_probe

DEFAULT = Numerics()


def log_scale_density(grid: PanelGrid):
    """``log(s'·|dx/dt|)`` on the grid nodes."""
    return -grid.values["D"] + grid.values["logJ"]


def log_speed_density(grid: PanelGrid):
    """``log(m'·|dx/dt|)`` on the grid nodes."""
    return grid.values["D"] - grid.values["loga"] + grid.values["logJ"]


@dataclass
class SeriesState:
    op: Operator1D
    delta: float
    side: Side
    grid: PanelGrid
    log_sum: np.ndarray  # log Σ_{n<=n_max} I_n at every node
    log_terms: list = field(default_factory=list)  # log I_n at panel breaks, first terms only
    n_max: int = 0
    tail_ratio: float = 0.0  # over the converged prefix
    converged_panels: int = 0  # leading panels on which the tail ratio is below tol
    last_log_term: np.ndarray | None = None  # log I_{n_max} at every node

    def converged_grid(self) -> PanelGrid:
        reason = None
        if self.converged_panels < self.grid.n_panels:
            reason = f"series unconverged beyond t={self.grid.breaks[self.converged_panels]:.6g} after {self.n_max} terms"
        return self.grid.prefix(self.converged_panels, reason)

    def value_at(self, y):
        t = self.grid.bmap.t_of(y)
        return float(np.exp(self.grid.interpolate(self.log_sum, t)[0]))


KEEP_TERMS = 64


def compute_series(
    op: Operator1D,
    delta: float,
    side: Side,
    *,
    depth: int = 60,
    t_end: float | None = None,
    tol: float = DEFAULT.tol,
    n_max: int = DEFAULT.n_max,
    numerics: Numerics = DEFAULT,
    n_terms: int | None = None,
    stop=None,
) -> SeriesState:
    """Sum the iterated integrals on a side grid until the tail ratio drops below ``tol``.

    With ``n_terms`` set, exactly that many levels are computed.  Nodes whose
    tail ratio is still above ``tol`` after ``n_max`` terms are excluded from
    the converged prefix (their partial sums remain lower bounds).  ``stop``,
    if given, is called with ``(grid, log_sum)`` every few terms and ends the
    summation early when it returns True.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    side = Side(side)
    grid = side_grid(op, side, depth, delta=delta, settings=numerics.probe.grid, t_end=t_end)
    phi_s = log_scale_density(grid)
    with np.errstate(divide="ignore"):
        phi_m = log_speed_density(grid) + np.log(grid.values["V"] + delta)
    log_I = np.zeros_like(phi_s)
    log_S = np.zeros_like(phi_s)
    log_terms = [grid.at_breaks(log_I)]
    limit = n_terms if n_terms is not None else n_max
    ratio = np.zeros_like(phi_s)
    decreasing = np.ones(phi_s.shape, dtype=bool)
    n = 0
    while n < limit:
        n += 1
        log_G = cumulative_log(grid, phi_m + log_I)
        new = cumulative_log(grid, phi_s + log_G)
        decreasing = new <= log_I
        log_I = new
        log_S = np.logaddexp(log_S, log_I)
        if n < KEEP_TERMS:
            log_terms.append(grid.at_breaks(log_I))
        with np.errstate(invalid="ignore"):
            ratio = np.exp(log_I - log_S)
        if n_terms is None and np.all((ratio < tol) & decreasing):
            break
        if stop is not None and n % 8 == 0 and stop(grid, log_S):
            break
    ok = (ratio < tol) & decreasing if n_terms is None else np.ones(ratio.shape, dtype=bool)
    bad_panels = np.flatnonzero(~ok.all(axis=1))
    conv = int(bad_panels[0]) if len(bad_panels) else grid.n_panels
    tail = float(ratio[:conv].max()) if conv else float(ratio.max())
    return SeriesState(op, delta, side, grid, log_S, log_terms, n, tail, conv, log_I)


def _side_for(op, y, side):
    if side is not None:
        return Side(side)
    return Side.UPPER if y >= op.c else Side.LOWER


def _check_point(op, y, side):
    e = op.endpoint(side)
    lo, hi = sorted((op.c, e))
    if not (lo <= y <= hi) or y == e:
        raise ValueError(f"y={y} is not between c={op.c} and the {side.value} endpoint")


def iter_integral(op: Operator1D, delta: float, side, n: int, y: float, numerics: Numerics = DEFAULT) -> float:
    """``I_n^{V+δ}(y)`` (upper side) or ``J_n^{V+δ}(y)`` (lower side)."""
    side = Side(side)
    _check_point(op, y, side)
    if n == 0:
        return 1.0
    if y == op.c:
        return 0.0
    t = float(op.bmap(side).t_of(y))
    st = compute_series(op, delta, side, t_end=t, n_terms=n, numerics=numerics, depth=_depth_for(op, side, t))
    return float(np.exp(st.last_log_term[-1, -1]))


def _depth_for(op, side, t):
    bm = op.bmap(side)
    if bm.finite:
        return int(np.ceil(t / np.log(2.0))) + 1
    return int(np.ceil(np.log2(max(np.expm1(min(t, 700.0)), 1.0)))) + 1


def series_sum(
    op: Operator1D, delta: float, y: float, side=None, tol: float = DEFAULT.tol,
    n_max: int = DEFAULT.n_max, numerics: Numerics = DEFAULT,
) -> float:
    """``Σ_n I_n^{V+δ}(y)``; raises :class:`TruncationBudgetExceeded` if the tail stalls."""
    side = _side_for(op, y, side)
    _check_point(op, y, side)
    if y == op.c:
        return 1.0
    t = float(op.bmap(side).t_of(y))
    st = compute_series(op, delta, side, t_end=t, tol=tol, n_max=n_max, numerics=numerics,
                        depth=_depth_for(op, side, t))
    value = float(np.exp(st.log_sum[-1, -1]))
    if st.converged_panels < st.grid.n_panels or st.grid.t_end < t:
        ratio = float(np.exp(st.log_terms[-1][-1] - st.log_sum[-1, -1])) if st.log_terms else 1.0
        raise TruncationBudgetExceeded(value, ratio, st.n_max)
    return value


# -- no-entrance tests ----------------------------------------------------------

def no_entrance_test(
    op: Operator1D, delta: float | None = None, side=Side.UPPER, q: float = 1.0,
    numerics: Numerics = DEFAULT,
) -> DivergenceVerdict:
    """Probe ``∫ (Σ I_n)^q m'`` toward the ``side`` endpoint; Diverges means no entrance.

    When ``V`` vanishes on that side the equivalent first-order test
    :func:`v0_fast_test` is used instead.
    """
    side = Side(side)
    delta = numerics.delta if delta is None else delta
    if op.potential_vanishes(side):
        v = v0_fast_test(op, side, q=q, numerics=numerics)
        v.growth_diagnostic["delegated"] = "v0_fast_test"
        return v
    log_big = np.log(numerics.probe.M_big)

    def blown_up(grid, log_S):
        return cumulative_log(grid, q * log_S + log_speed_density(grid))[-1, -1] > log_big

    st = compute_series(op, delta, side, depth=numerics.probe.depth, tol=numerics.tol,
                        n_max=numerics.probe_n_max, numerics=numerics, stop=blown_up)
    return series_verdict(st, q, numerics)


def series_verdict(st: SeriesState, q: float, numerics: Numerics = DEFAULT) -> DivergenceVerdict:
    # partial sums bound the series from below, so a blow-up anywhere on the grid is final
    lower = cumulative_log(st.grid, q * st.log_sum + log_speed_density(st.grid))
    if lower[-1, -1] > np.log(numerics.probe.M_big):
        v = DivergenceVerdict(Outcome.DIVERGES, growth_diagnostic={"rule": "blow-up", "partial_sums": True})
        pt, plf = probe_values(st.grid, lower)
        v.probes = list(zip(st.grid.bmap.x(pt).tolist(), np.exp(np.minimum(plf, 709.0)).tolist()))
        v.growth_diagnostic.update(method="series", n_terms=st.n_max, delta=st.delta,
                                   t_end=float(st.grid.t_end))
        return v
    g = st.converged_grid()
    logg = q * st.log_sum[: g.n_panels] + log_speed_density(g)
    v = judge_grid(g, logg, numerics.probe)
    v.growth_diagnostic.update(
        method="series", n_terms=st.n_max, tail_ratio=st.tail_ratio, delta=st.delta,
        converged_t_end=float(g.t_end), grid_truncated=g.truncated,
    )
    return v


def _first_order_probe(op, side, numerics, log_integrand):
    side = Side(side)

    def build(depth):
        g = side_grid(op, side, depth, settings=numerics.probe.grid)
        return g, log_integrand(g)

    return run_probe(build, op.bmap(side), numerics.probe)


def log_scale_from_c(grid: PanelGrid):
    """``log|s(y) - s(c)|`` on the nodes."""
    return cumulative_log(grid, log_scale_density(grid))


def v0_fast_test(op: Operator1D, side=Side.UPPER, q: float = 1.0, numerics: Numerics = DEFAULT) -> DivergenceVerdict:
    """Probe ``∫ |s(y) - s(c)|^q m'(y) dy``; for ``V = 0`` this decides no entrance."""
    def integrand(g):
        return q * log_scale_from_c(g) + log_speed_density(g)

    v = _first_order_probe(op, side, numerics, integrand)
    v.growth_diagnostic["method"] = "v0_fast_path"
    return v


def feller_classical_entrance(op: Operator1D, side=Side.UPPER, numerics: Numerics = DEFAULT) -> DivergenceVerdict:
    """Probe ``∫ (1 + V) m' |s - s(c)|``; Converges means entrance in Feller's classical sense."""
    def integrand(g):
        return np.log1p(g.values["V"]) + log_scale_from_c(g) + log_speed_density(g)

    v = _first_order_probe(op, side, numerics, integrand)
    v.growth_diagnostic["method"] = "feller_classical"
    return v
