"""Quadrature on compact intervals and divergence probing toward a boundary.

Everything that approaches a boundary works in a logarithmic coordinate
``t >= 0`` measured from the reference point ``c``:

* finite endpoint ``e``: ``x(t) = e - sgn * |e - c| * exp(-t)``, so ``t`` counts
  halvings of the distance to ``e`` (in units of ``ln 2``);
* infinite endpoint: ``x(t) = c + sgn * expm1(t)``, so ``t`` counts doublings.

The interval ``[0, t_max]`` is cut into panels that are refined adaptively.
Each panel carries a 17-point Chebyshev-Lobatto rule with a spectral
cumulative-integration matrix, so antiderivatives are available at every
node.  Positive integrands are handled in log space throughout, which keeps
``exp(±∫ b/a)`` representable far beyond double-precision range.

:func:`probe_divergence` turns a condition of the form ``∫ f = +∞`` into a
three-valued :class:`DivergenceVerdict`.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate as _spi

from .errors import (
    EvaluationError, InvalidOperator, NonIntegrableSingularity, QuadratureFailure,
)

LN2 = math.log(2.0)

# -- Chebyshev-Lobatto panel rule --------------------------------------------

NDEG = 16
NODES = -np.cos(np.pi * np.arange(NDEG + 1) / NDEG)


def _cumulative_matrix(nodes):
    n = len(nodes) - 1
    V = C.chebvander(nodes, n)
    Vinv = np.linalg.inv(V)
    S = np.empty((n + 1, n + 1))
    for j in range(n + 1):
        S[:, j] = C.chebval(nodes, C.chebint(Vinv[:, j], lbnd=-1))
    return S


SMAT = _cumulative_matrix(NODES)
W17 = SMAT[-1].copy()
W9 = _cumulative_matrix(NODES[::2])[-1].copy()
_BARY = np.ones(NDEG + 1)
_BARY[1::2] = -1.0
_BARY[[0, -1]] *= 0.5


def cheb_interp(values, s):
    """Barycentric interpolation of panel ``values`` at reference points ``s``."""
    s = np.atleast_1d(s)
    diff = s[:, None] - NODES[None, :]
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        w = _BARY / diff
        out = (w @ values) / w.sum(axis=1)
    hit = exact.any(axis=1)
    if hit.any():
        out[hit] = values[exact[hit].argmax(axis=1)]
    return out


# -- boundary maps ------------------------------------------------------------

class BoundaryMap:
    """The coordinate ``t`` from ``c`` (t=0) toward ``endpoint`` (t=inf)."""

    REL_FLOOR = 2.0 ** -40  # closest relative approach to a nonzero finite endpoint

    def __init__(self, c: float, endpoint: float):
        if endpoint == c:
            raise ValueError("endpoint coincides with reference point")
        self.c = float(c)
        self.endpoint = float(endpoint)
        self.sgn = 1.0 if endpoint > c else -1.0
        self.finite = math.isfinite(endpoint)
        self.length = abs(endpoint - c) if self.finite else 1.0

    def x(self, t):
        t = np.asarray(t, dtype=float)
        if self.finite:
            return self.endpoint - self.sgn * self.length * np.exp(-t)
        return self.c + self.sgn * np.expm1(t)

    def jac(self, t):
        t = np.asarray(t, dtype=float)
        if self.finite:
            return self.sgn * self.length * np.exp(-t)
        return self.sgn * np.exp(t)

    def log_abs_jac(self, t):
        t = np.asarray(t, dtype=float)
        return math.log(self.length) - t if self.finite else t

    def t_of(self, x):
        x = np.asarray(x, dtype=float)
        if self.finite:
            with np.errstate(divide="ignore"):
                return np.log(self.length / np.abs(self.endpoint - x))
        return np.log1p(np.abs(x - self.c))

    def probe_t(self, k):
        """t of the k-th probe point: distance halved (finite) / doubled (infinite) k times."""
        k = np.asarray(k, dtype=float)
        return k * LN2 if self.finite else np.log1p(2.0 ** np.minimum(k, 1000.0))

    def t_cap(self):
        """Largest t at which x(t) is still resolvable in double precision."""
        if self.finite:
            if self.endpoint == 0.0:
                return 700.0
            return math.log(self.length / (abs(self.endpoint) * self.REL_FLOOR))
        return 690.0

    @property
    def extendable(self):
        """Whether probing may run far deeper than the default depth."""
        return (not self.finite) or self.endpoint == 0.0


# -- panel grids --------------------------------------------------------------

@dataclass
class PanelGrid:
    """Adaptive panels on ``[t_lo, t_end]`` with per-node function values."""

    bmap: BoundaryMap
    breaks: np.ndarray  # shape (P+1,)
    values: dict  # name -> (P, 17) array
    truncated: str | None = None  # why the grid stops short of the requested end
    requested_end: float = 0.0

    @property
    def n_panels(self):
        return len(self.breaks) - 1

    @property
    def half(self):
        return 0.5 * np.diff(self.breaks)

    @property
    def t(self):
        mid = 0.5 * (self.breaks[1:] + self.breaks[:-1])
        return mid[:, None] + self.half[:, None] * NODES[None, :]

    @property
    def t_end(self):
        return float(self.breaks[-1])

    def panel_of(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.n_panels - 1)

    def interpolate(self, nodal, t):
        """Evaluate a nodal array at arbitrary ``t`` inside the grid."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = self.panel_of(t)
        s = (t - 0.5 * (self.breaks[p] + self.breaks[p + 1])) / self.half[p]
        out = np.empty_like(t)
        for pp in np.unique(p):
            sel = p == pp
            out[sel] = cheb_interp(nodal[pp], s[sel])
        return out

    def prefix(self, n_panels: int, reason: str | None = None) -> "PanelGrid":
        """The first ``n_panels`` panels as a grid of their own."""
        if n_panels >= self.n_panels:
            return self
        vals = {k: v[:n_panels] for k, v in self.values.items()}
        g = PanelGrid(self.bmap, self.breaks[: n_panels + 1], vals, reason or self.truncated, self.requested_end)
        return g

    def at_breaks(self, nodal):
        """Values at panel breaks (left end of each panel plus the final right end)."""
        return np.concatenate([nodal[:, 0], nodal[-1:, -1]])


@dataclass(frozen=True)
class GridSettings:
    tol: float = 1e-12  # relative accuracy of panel integrals
    max_variation: float = 6.0  # largest allowed change of a log-integrand on a panel
    subdivide: int = 2  # base panels per probe interval
    max_panels: int = 6000
    min_width: float = 1e-10


def _panel_ok(vals, log_names, signed_names, growth_names, half, settings, running):
    for name in log_names:
        v = vals[name]
        if np.isnan(v).any() or (v == np.inf).any():
            return False
        fin = np.isfinite(v)
        if not fin.any():
            continue
        m = v[fin].max()
        if m + math.log(2.0 * half) < running.get(name, -np.inf) - 60.0:
            continue  # negligible against what has already accumulated
        if fin.all() and m - v.min() > settings.max_variation:
            return False
        e = np.exp(v - m)
        i17 = W17 @ e
        i9 = W9 @ e[::2]
        if abs(i17 - i9) > settings.tol * abs(i17) + 1e-300:
            return False
    for name in signed_names:
        v = vals[name]
        i17 = W17 @ v
        i9 = W9 @ v[::2]
        scale = W17 @ np.abs(v)
        if abs(i17 - i9) * half > settings.tol * max(scale * half, 1e-14):
            return False
    for name in growth_names:
        # local exponential rate times panel width bounds the growth of a solution
        if np.max(vals[name]) * 2.0 * half > 0.5 * settings.max_variation:
            return False
    return True


def build_grid(
    bmap: BoundaryMap,
    breaks,
    evaluate_panel: Callable[[np.ndarray], dict],
    *,
    log_names=(),
    signed_names=(),
    growth_names=(),
    settings: GridSettings = GridSettings(),
) -> PanelGrid:
    """Refine base ``breaks`` until every named integrand is resolved.

    ``evaluate_panel(t_nodes)`` returns a dict of arrays on the 17 nodes.  If it
    raises an evaluation or validity error, or if the panel budget is spent,
    the grid is truncated at the last accepted panel and ``truncated`` says why.
    """
    breaks = np.asarray(breaks, dtype=float)
    out_breaks = [float(breaks[0])]
    out_vals = []
    truncated = None
    running = {}
    for a, b in zip(breaks[:-1], breaks[1:]):
        stack = [(float(a), float(b))]
        while stack:
            lo, hi = stack.pop()
            half = 0.5 * (hi - lo)
            tn = 0.5 * (lo + hi) + half * NODES
            try:
                vals = evaluate_panel(tn)
            except (EvaluationError, InvalidOperator, FloatingPointError) as exc:
                truncated = f"evaluation failed near t={lo:.6g}: {exc}"
                break
            if any(np.isnan(vals[k]).any() or (vals[k] == np.inf).any() for k in log_names):
                truncated = f"integrand overflow near t={lo:.6g}"
                break
            if any(not np.isfinite(vals[k]).all() for k in signed_names):
                truncated = f"non-finite coefficient ratio near t={lo:.6g}"
                break
            if half > settings.min_width * (1.0 + abs(lo)) and not _panel_ok(
                vals, log_names, signed_names, growth_names, half, settings, running
            ):
                mid = 0.5 * (lo + hi)
                stack.append((mid, hi))
                stack.append((lo, mid))
                continue
            out_breaks.append(hi)
            out_vals.append(vals)
            for name in log_names:
                v = vals[name]
                if np.isfinite(v).any():
                    m = v[np.isfinite(v)].max()
                    est = m + math.log(max(W17 @ np.exp(np.where(np.isfinite(v), v - m, -np.inf)), 1e-300) * half)
                    running[name] = np.logaddexp(running.get(name, -np.inf), est)
            if len(out_vals) >= settings.max_panels:
                truncated = f"panel budget {settings.max_panels} exhausted at t={hi:.6g}"
                break
        if truncated:
            break
    if not out_vals:
        raise QuadratureFailure(truncated or "empty grid")
    names = out_vals[0].keys()
    values = {k: np.array([v[k] for v in out_vals]) for k in names}
    return PanelGrid(bmap, np.array(out_breaks), values, truncated, float(breaks[-1]))


def probe_breaks(bmap: BoundaryMap, depth: int, subdivide: int = 2, t_end: float | None = None):
    """Base breaks: the probe points ``t_k`` (k=0..depth), each interval split ``subdivide`` times."""
    ks = np.arange(depth + 1)
    tk = np.concatenate([[0.0], bmap.probe_t(ks)]) if not bmap.finite else bmap.probe_t(ks)
    tk = tk[tk <= bmap.t_cap()]
    if t_end is not None:
        tk = np.concatenate([tk[tk < t_end], [t_end]])
    fine = [tk[0]]
    for a, b in zip(tk[:-1], tk[1:]):
        fine.extend(a + (b - a) * np.arange(1, subdivide + 1) / subdivide)
    return np.array(fine)


def cumulative(grid: PanelGrid, f):
    """Antiderivative from ``t_lo`` at every node of a signed nodal integrand."""
    within = (f @ SMAT.T) * grid.half[:, None]
    totals = within[:, -1]
    offsets = np.concatenate([[0.0], np.cumsum(totals)[:-1]])
    return within + offsets[:, None]


def cumulative_log(grid: PanelGrid, logf):
    """Log of the antiderivative of ``exp(logf)`` (a nonnegative integrand)."""
    logf = np.asarray(logf, dtype=float)
    m = np.max(logf, axis=1)
    dead = ~np.isfinite(m)
    m_safe = np.where(dead, 0.0, m)
    e = np.exp(logf - m_safe[:, None])
    e[dead] = 0.0
    within = (e @ SMAT.T) * grid.half[:, None]
    within = np.maximum(within, 0.0)
    with np.errstate(divide="ignore"):
        within_log = np.log(within) + m_safe[:, None]
    within_log[dead] = -np.inf
    totals = within_log[:, -1]
    acc = np.logaddexp.accumulate(totals)
    offsets = np.concatenate([[-np.inf], acc[:-1]])
    return np.logaddexp(offsets[:, None], within_log)


# -- compact quadrature --------------------------------------------------------

def integrate(f, x1, x2, tol=1e-10, tol_abs=1e-14, limit=200):
    """Adaptive integral of ``f`` over ``[x1, x2]``.

    Endpoints may be infinite or carry integrable singularities (QUADPACK's
    extrapolating QAGS/QAGI).  Returns ``(value, error_estimate)``.
    """
    if x1 == x2:
        return 0.0, 0.0
    if x1 > x2:
        v, e = integrate(f, x2, x1, tol, tol_abs, limit)
        return -v, e
    with warnings.catch_warnings():
        warnings.simplefilter("error", _spi.IntegrationWarning)
        try:
            value, err = _spi.quad(f, x1, x2, epsrel=tol, epsabs=tol_abs, limit=limit)
        except _spi.IntegrationWarning as w:
            msg = str(w)
            if "divergent" in msg or "singularit" in msg:
                raise NonIntegrableSingularity(msg.strip().splitlines()[0]) from None
            raise QuadratureFailure(msg.strip().splitlines()[0]) from None
        except EvaluationError as exc:
            raise NonIntegrableSingularity(str(exc)) from exc
    if not math.isfinite(value):
        raise NonIntegrableSingularity(f"integral over [{x1}, {x2}] is not finite")
    return value, err


# -- divergence verdicts ------------------------------------------------------

class Outcome(str, enum.Enum):
    DIVERGES = "Diverges"
    CONVERGES = "Converges"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ProbeSettings:
    M_big: float = 1e12
    K_w: int = 6
    eps_conv: float = 1e-6
    depth: int = 60
    extended_depth: int = 1000  # used only where the endpoint coordinate stays representable
    sigma_tol: float = 2e-3  # geometric-rate resolution
    min_decay: float = 0.25  # |sigma| * t_end needed for a rate to count as resolved over the range
    stability: float = 0.75  # rate ratio separating constant from 1/t-decaying rates
    contraction: float = 0.45  # largest contraction of rate changes counted as settling
    bertrand_tol: float = 0.1  # half-width of the undecided band around the log-scale threshold
    min_range: float = 3.0  # minimal t-range for exponent fits
    grid: GridSettings = GridSettings()


@dataclass
class DivergenceVerdict:
    outcome: Outcome
    limit: float | None = None
    tail_bound: float | None = None
    probes: list = field(default_factory=list)  # (grid point, partial value)
    growth_diagnostic: dict = field(default_factory=dict)

    @property
    def diverges(self):
        return self.outcome is Outcome.DIVERGES

    @property
    def converges(self):
        return self.outcome is Outcome.CONVERGES

    def to_dict(self):
        return {
            "outcome": self.outcome.value,
            "limit": self.limit,
            "tail_bound": self.tail_bound,
            "probes": [[float(y), float(v)] for y, v in self.probes],
            "growth_diagnostic": self.growth_diagnostic,
        }


def _segment_fit(t, ell, lo, hi, use_log):
    sel = (t >= lo) & (t <= hi) & np.isfinite(ell)
    if sel.sum() < 3:
        return None, None
    tt = np.log(t[sel]) if use_log else t[sel]
    slope, _ = np.polyfit(tt - tt.mean(), ell[sel], 1)
    return -float(slope), float(np.exp(np.log(t[sel]).mean()) if use_log else t[sel].mean())


def _bertrand_fit(t, ell, lo, hi):
    """Fit ``ell + log t = a - B log log t + g/t`` on a window and return ``B``.

    The ``1/t`` term absorbs offsets such as the lower integration limit or a
    shifted logarithm, which otherwise bias ``B`` by ``O(log t / t)``.
    """
    sel = (t >= lo) & (t <= hi) & np.isfinite(ell)
    if sel.sum() < 4 or lo <= math.e:
        return None
    tt = t[sel]
    A = np.stack([np.ones_like(tt), -np.log(np.log(tt)), 1.0 / tt], axis=1)
    coef, *_ = np.linalg.lstsq(A, ell[sel] + np.log(tt), rcond=None)
    return float(coef[1])


def judge(t, ell, probe_t, probe_logF, settings: ProbeSettings, bmap=None):
    """Decide divergence of ``∫ exp(ell(t)) dt`` from nodal log-integrand samples.

    ``t``/``ell`` are flattened nodes; ``probe_t``/``probe_logF`` the partial
    integrals at the probe points.  Rules, in order:

    1. blow-up: a partial integral exceeds ``M_big``  -> Diverges;
    2. tail: increments decay geometrically over the last ``K_w`` windows and
       the extrapolated tail is below ``eps_conv`` times the partial value
       -> Converges;
    3. geometric rate: the local decay rate ``sigma = -d ell/dt`` measured on
       two windows ``[t/2, 5t/8]`` and ``[7t/8, t]`` is resolved, of one sign,
       and not fading like ``1/t``  -> sign decides; failing that, if the rate
       measured on three windows changes by a contracting factor well below
       the 0.6 a ``1/t`` drift produces, its extrapolated limit decides;
    4. logarithmic scale: the Bertrand exponent ``B`` of
       ``exp(ell) ~ 1/(t (log t)^B)``, fitted with a ``1/t`` offset term on both windows, is below ``1 - tol`` (Diverges) or
       above ``1 + tol`` (Converges), and does not drift toward 1 by more than
       ``tol`` between the windows;
    otherwise Inconclusive.
    """
    s = settings
    t = np.asarray(t, dtype=float).ravel()
    ell = np.asarray(ell, dtype=float).ravel()
    probe_t = np.asarray(probe_t, dtype=float)
    probe_logF = np.asarray(probe_logF, dtype=float)
    diag = {"t_end": float(t[-1]) if len(t) else 0.0}
    if bmap is not None:
        probes = list(zip(bmap.x(probe_t).tolist(), np.exp(np.minimum(probe_logF, 709.0)).tolist()))
    else:
        probes = list(zip(probe_t.tolist(), np.exp(np.minimum(probe_logF, 709.0)).tolist()))
    logF_end = float(probe_logF[-1]) if len(probe_logF) else -np.inf
    F_end = math.exp(min(logF_end, 700.0))

    def verdict(outcome, rule, limit=None, tail=None):
        diag["rule"] = rule
        return DivergenceVerdict(outcome, limit, tail, probes, diag)

    if np.any(probe_logF > math.log(s.M_big)):
        return verdict(Outcome.DIVERGES, "blow-up")

    # tail rule on probe increments
    if len(probe_logF) >= s.K_w + 2 and np.isfinite(logF_end):
        lf = probe_logF[-(s.K_w + 2):]
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = lf[1:] + np.log(-np.expm1(np.minimum(lf[:-1] - lf[1:], 0.0)))
        if np.all(np.isfinite(logd)):
            ratios = np.exp(np.diff(logd))
            r = float(ratios.max())
            diag["increment_ratio"] = r
            if r < 1.0:
                tail = math.exp(logd[-1]) * r / (1.0 - r)
                if tail <= s.eps_conv * F_end:
                    return verdict(Outcome.CONVERGES, "tail", F_end + tail, tail)
        elif np.all(~np.isfinite(lf[1:])) or np.all(lf[1:] == lf[0]):
            pass

    finite = np.isfinite(ell)
    t_end = float(t[-1]) if len(t) else 0.0
    if not finite.any() or (len(t) and not np.isfinite(ell[t >= t_end / 2]).any()):
        # integrand vanishes identically near the boundary
        return verdict(Outcome.CONVERGES, "vanishing", F_end, 0.0)
    if t_end < s.min_range:
        return verdict(Outcome.INCONCLUSIVE, "insufficient-range")

    sig_a, _ = _segment_fit(t, ell, 0.5 * t_end, 0.625 * t_end, False)
    sig_m, _ = _segment_fit(t, ell, 0.6875 * t_end, 0.8125 * t_end, False)
    sig_b, _ = _segment_fit(t, ell, 0.875 * t_end, t_end, False)
    diag.update(sigma_mid=sig_a, sigma_end=sig_b)
    if sig_a is None or sig_b is None or sig_m is None:
        return verdict(Outcome.INCONCLUSIVE, "too-few-samples")
    g_end = math.exp(min(float(ell[finite][-1]), 700.0))

    def by_rate(sig, rule):
        if sig < 0:
            return verdict(Outcome.DIVERGES, rule)
        tail = g_end / sig
        return verdict(Outcome.CONVERGES, rule, F_end + tail, 2.0 * tail)

    def resolved(sig):
        return abs(sig) >= s.sigma_tol and abs(sig) * t_end >= s.min_decay

    if (
        resolved(sig_b)
        and sig_a * sig_b > 0
        and sig_b / sig_a >= s.stability
    ):
        return by_rate(sig_b, "geometric-rate")
    # a rate that settles geometrically fast (faster than any 1/t-type drift)
    d1, d2 = sig_m - sig_a, sig_b - sig_m
    if d1 != 0.0:
        rho = d2 / d1
        diag["rate_contraction"] = rho
        if 0.0 < rho <= s.contraction:
            sig_inf = sig_b + d2 * rho / (1.0 - rho)
            diag["sigma_limit"] = sig_inf
            if resolved(sig_inf) and sig_inf * sig_b > 0:
                return by_rate(sig_inf, "settling-rate")

    beta_a, ca = _segment_fit(t, ell, 0.5 * t_end, 0.625 * t_end, True)
    beta_b, cb = _segment_fit(t, ell, 0.875 * t_end, t_end, True)
    if ca is None or ca <= math.e:
        return verdict(Outcome.INCONCLUSIVE, "insufficient-range")
    bert_a = _bertrand_fit(t, ell, 0.5 * t_end, 0.625 * t_end)
    bert_b = _bertrand_fit(t, ell, 0.875 * t_end, t_end)
    if bert_a is None or bert_b is None:
        return verdict(Outcome.INCONCLUSIVE, "insufficient-range")
    diag.update(beta_mid=beta_a, beta_end=beta_b, bertrand_mid=bert_a, bertrand_end=bert_b)
    lo, hi = 1.0 - s.bertrand_tol, 1.0 + s.bertrand_tol
    # a number still drifting toward 1 is not trusted
    drift = bert_b - bert_a
    if bert_a <= lo and bert_b <= lo and drift <= s.bertrand_tol:
        return verdict(Outcome.DIVERGES, "log-scale")
    if bert_a >= hi and bert_b >= hi and drift >= -s.bertrand_tol:
        tail = g_end * cb * math.log(cb) / (bert_b - 1.0)
        return verdict(Outcome.CONVERGES, "log-scale", F_end + tail, 2.0 * tail)
    return verdict(Outcome.INCONCLUSIVE, "undecided")


def probe_values(grid: PanelGrid, logF):
    """``(t_k, log F(t_k))`` at the breaks that coincide with probe points, plus the grid end."""
    breaks = grid.breaks
    logF_breaks = grid.at_breaks(logF)
    bmap = grid.bmap
    tk = bmap.probe_t(np.arange(2000))
    if not bmap.finite:
        tk = np.concatenate([[0.0], tk])
    tk = tk[tk <= breaks[-1] + 1e-12]
    idx = np.searchsorted(breaks, tk - 1e-12)
    idx = idx[(idx < len(breaks)) & (np.abs(breaks[np.minimum(idx, len(breaks) - 1)] - tk) < 1e-9)]
    pt, plf = breaks[idx], logF_breaks[idx]
    if len(pt) == 0 or pt[-1] < breaks[-1]:
        pt = np.append(pt, breaks[-1])
        plf = np.append(plf, logF_breaks[-1])
    return pt, plf


def judge_grid(grid: PanelGrid, log_integrand, settings: ProbeSettings):
    """Judge ``∫ exp(log_integrand) dt`` over a panel grid built from probe breaks.

    ``log_integrand`` already includes ``log|dx/dt|``.
    """
    logF = cumulative_log(grid, log_integrand)
    bmap = grid.bmap
    pt, plf = probe_values(grid, logF)
    v = judge(grid.t.ravel(), np.asarray(log_integrand).ravel(), pt, plf, settings, bmap)
    v.growth_diagnostic["grid_truncated"] = grid.truncated
    v.growth_diagnostic["panels"] = int(grid.n_panels)
    return v


def run_probe(build: Callable[[int], tuple], bmap: BoundaryMap, settings: ProbeSettings):
    """Probe at the default depth; if undecided and the endpoint allows it, go deeper.

    ``build(depth)`` returns ``(grid, log_integrand)``.
    """
    grid, logg = build(settings.depth)
    v = judge_grid(grid, logg, settings)
    v.growth_diagnostic["depth"] = settings.depth
    if (
        v.outcome is Outcome.INCONCLUSIVE
        and bmap.extendable
        and settings.extended_depth > settings.depth
        and grid.truncated is None
    ):
        grid2, logg2 = build(settings.extended_depth)
        v2 = judge_grid(grid2, logg2, settings)
        v2.growth_diagnostic["depth"] = settings.extended_depth
        v2.growth_diagnostic["default_depth_verdict"] = v.growth_diagnostic
        return v2
    return v


def probe_divergence(
    f: Callable,
    c: float,
    endpoint: float,
    *,
    log: bool = False,
    settings: ProbeSettings = ProbeSettings(),
) -> DivergenceVerdict:
    """Decide whether ``∫_c^endpoint f(x) dx`` diverges, for ``f >= 0``.

    ``f`` must accept numpy arrays.  With ``log=True`` it returns ``log f``
    instead, which is how overflowing integrands are passed in.
    """
    bmap = BoundaryMap(c, endpoint)

    def panel(tn):
        xs = bmap.x(tn)
        with np.errstate(divide="ignore"):
            lf = np.asarray(f(xs), dtype=float) if log else np.log(np.asarray(f(xs), dtype=float))
        if np.isnan(lf).any():
            raise EvaluationError("integrand is negative or undefined", float(xs[np.isnan(lf)][0]))
        return {"logg": lf + bmap.log_abs_jac(tn)}

    def build(depth):
        grid = build_grid(
            bmap, probe_breaks(bmap, depth, settings.grid.subdivide), panel,
            log_names=("logg",), settings=settings.grid,
        )
        return grid, grid.values["logg"]

    return run_probe(build, bmap, settings)


def with_overrides(settings: ProbeSettings, **kw) -> ProbeSettings:
    grid_kw = {k: kw.pop(k) for k in list(kw) if k in GridSettings.__dataclass_fields__}
    if grid_kw:
        kw["grid"] = replace(settings.grid, **grid_kw)
    return replace(settings, **kw)
