"""Tunable numerical settings shared by the series, ODE and classifier modules."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .quadrature import GridSettings, ProbeSettings


@dataclass(frozen=True)
class Numerics:
    delta: float = 1.0  # shift of the potential, V + delta
    tol: float = 1e-13  # series tail ratio I_n / sum
    n_max: int = 64  # terms allowed for a point value of the series
    probe_n_max: int = 1024  # terms allowed when the series feeds a divergence probe
    rtol: float = 1e-10
    atol: float = 1e-12
    L_max: float = 1e8  # L and D are carried separately from E = L + D, see ode.py
    w_max: float = 1e150
    tol_cross: float = 1e-5
    probe: ProbeSettings = field(default_factory=ProbeSettings)

    def with_overrides(self, **kw) -> "Numerics":
        """Override by flat name; probe and grid fields are routed to their dataclass."""
        own = {f.name for f in fields(self)}
        probe_names = {f.name for f in fields(ProbeSettings)}
        grid_names = {f.name for f in fields(GridSettings)}
        top, probe, grid = {}, {}, {}
        for k, v in kw.items():
            if k in own and k != "probe":
                top[k] = v
            elif k in probe_names and k != "grid":
                probe[k] = v
            elif k in grid_names:
                grid[k] = v
            else:
                raise KeyError(k)
        p = self.probe
        if grid:
            p = replace(p, grid=replace(p.grid, **grid))
        if probe:
            p = replace(p, **probe)
        return replace(self, probe=p, **top)


BUDGETS = {
    "quick": dict(depth=40, extended_depth=300, probe_n_max=256, max_panels=3000, L_max=1e6),
    "default": {},
    "deep": dict(extended_depth=2000, probe_n_max=4096, max_panels=20000),
}


def budget(name: str = "default") -> Numerics:
    if name not in BUDGETS:
        raise ValueError(f"unknown budget {name!r}; choose from {sorted(BUDGETS)}")
    return Numerics().with_overrides(**BUDGETS[name])
