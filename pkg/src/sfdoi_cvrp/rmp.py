"""Restricted master problems: plain set cover and the DOI-augmented cover.

Variables are ordered route columns first (insertion order), then swap
variables ``omega[u, v]`` (sorted pairs), then rebate variables
``xi[u, g]`` (sorted by customer and level index ``g``). Rows are one cover
row per customer in ascending order followed by one link row per
``(u, g)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .doi import RebateProfile, SigmaGrid, SwapBounds
from .instance import Instance
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp
from .routes import Route

__all__ = [
    "MODES",
    "RmpModel",
    "RmpSolution",
    "DualSolution",
    "build_rmp",
    "solve_rmp",
    "add_column",
    "strip_active_doi",
    "write_lp",
]

log = logging.getLogger(__name__)

MODES = ("none", "S", "F", "SF")


def normalize_mode(mode: str) -> str:
    m = mode.upper() if mode.lower() != "none" else "none"
    if m not in MODES:
        raise ValueError(f"unknown DOI mode {mode!r}; expected one of {MODES}")
    return m


@dataclass
class Column:
    route: Route
    profile: RebateProfile | None = None


@dataclass
class RmpModel:
    inst: Instance
    mode: str
    swaps: dict[tuple[int, int], float] = field(default_factory=dict)
    grid: SigmaGrid | None = None
    columns: list[Column] = field(default_factory=list)
    banned_swaps: set = field(default_factory=set)
    banned_levels: set = field(default_factory=set)
    _keys: dict = field(default_factory=dict, repr=False)
    _levels_seen: set = field(default_factory=set, repr=False)

    @property
    def uses_swaps(self) -> bool:
        return self.mode in ("S", "SF")

    @property
    def uses_rebates(self) -> bool:
        return self.mode in ("F", "SF")

    def link_rows(self) -> list[tuple[int, int]]:
        if not self.uses_rebates:
            return []
        return sorted(self._levels_seen - self.banned_levels)

    def swap_vars(self) -> list[tuple[int, int]]:
        if not self.uses_swaps:
            return []
        return sorted(self.swaps)

    @property
    def doi_created(self) -> int:
        """Number of distinct DOI variables ever present in the model."""
        n = len(self.swaps) + len(self.banned_swaps) if self.uses_swaps else 0
        return n + (len(self._levels_seen) if self.uses_rebates else 0)

    def __contains__(self, route: Route) -> bool:
        return route.key in self._keys


@dataclass
class RmpSolution:
    theta: np.ndarray
    omega: dict[tuple[int, int], float]
    xi: dict[tuple[int, int], float]
    status: str

    def active_doi(self, tol: float = 1e-6) -> list[tuple[str, tuple[int, int]]]:
        act = [("omega", s) for s, v in self.omega.items() if v > tol]
        return act + [("xi", s) for s, v in self.xi.items() if v > tol]


@dataclass
class DualSolution:
    alpha: np.ndarray  # indexed by node; zero at both depots
    link_duals: dict[tuple[int, int], float]
    objective: float
    status: str
    ray_support: list[tuple[str, tuple[int, int]]] = field(default_factory=list)


def add_column(model: RmpModel, route: Route, profile: RebateProfile | None = None) -> RmpModel:
    if route in model:
        log.warning("route %s already in the master; ignored", route)
        return model
    if model.uses_rebates:
        if profile is None or not profile.rounded:
            raise ValueError("rebate modes need a profile rounded to the rebate grid")
        for u, g in profile.level.items():
            model._levels_seen.add((u, g))
    model._keys[route.key] = len(model.columns)
    model.columns.append(Column(route, profile))
    return model


def build_rmp(
    inst: Instance,
    columns,
    swap_bounds: SwapBounds | None,
    mode: str,
    grid: SigmaGrid | None = None,
) -> RmpModel:
    """``columns`` holds routes or ``(route, profile)`` pairs."""
    mode = normalize_mode(mode)
    swaps = dict(swap_bounds.rho) if (swap_bounds is not None and mode in ("S", "SF")) else {}
    model = RmpModel(inst, mode, swaps, grid)
    for col in columns:
        route, profile = (col, None) if isinstance(col, Route) else col
        add_column(model, route, profile)
    return model


def _assemble(model: RmpModel, plain: bool):
    inst = model.inst
    n = inst.n_customers
    swaps = [] if plain else model.swap_vars()
    links = [] if plain else model.link_rows()
    link_index = {s: n + k for k, s in enumerate(links)}
    rows, cols, vals = [], [], []
    cost = []
    for j, col in enumerate(model.columns):
        cost.append(float(col.route.cost))
        for u, a in col.route.visit_count.items():
            rows.append(u - 1); cols.append(j); vals.append(float(a))
        if links and col.profile is not None and col.profile.level:
            for u, g in col.profile.level.items():
                r = link_index.get((u, g))
                if r is not None:
                    rows.append(r); cols.append(j); vals.append(-1.0)
    j0 = len(model.columns)
    for k, (u, v) in enumerate(swaps):
        cost.append(float(model.swaps[(u, v)]))
        rows += [u - 1, v - 1]; cols += [j0 + k, j0 + k]; vals += [-1.0, 1.0]
    j1 = j0 + len(swaps)
    for k, (u, g) in enumerate(links):
        cost.append(-float(model.grid.value(u, g)))
        rows += [u - 1, link_index[(u, g)]]; cols += [j1 + k, j1 + k]; vals += [-1.0, 1.0]
    m = n + len(links)
    a = sp.csr_matrix((vals, (rows, cols)), shape=(m, len(cost)))
    senses = [">="] * n + ["<="] * len(links)
    b = np.concatenate([np.ones(n), np.zeros(len(links))])
    return np.array(cost), a, senses, b, swaps, links


def solve_rmp(model: RmpModel, plain: bool = False) -> tuple[RmpSolution, DualSolution]:
    """Solve the master; ``plain=True`` drops every DOI variable for this solve."""
    n = model.inst.n_customers
    c, a, senses, b, swaps, links = _assemble(model, plain)
    res = solve_lp(c, a, senses, b)
    n_cols = len(model.columns)
    if res.status == INFEASIBLE:
        raise RuntimeError("restricted master is infeasible; singleton columns missing?")
    if res.status == UNBOUNDED:
        support = []
        for i in res.ray_support:
            if n_cols <= i < n_cols + len(swaps):
                support.append(("omega", swaps[i - n_cols]))
            elif i >= n_cols + len(swaps):
                support.append(("xi", links[i - n_cols - len(swaps)]))
        sol = RmpSolution(np.zeros(n_cols), {}, {}, UNBOUNDED)
        duals = DualSolution(np.zeros(n + 2), {}, float("-inf"), UNBOUNDED, support)
        return sol, duals
    x, y = res.x, res.duals
    alpha = np.zeros(n + 2)
    alpha[1 : n + 1] = np.maximum(y[:n], 0.0)
    sol = RmpSolution(
        theta=x[:n_cols],
        omega={s: float(x[n_cols + k]) for k, s in enumerate(swaps)},
        xi={s: float(x[n_cols + len(swaps) + k]) for k, s in enumerate(links)},
        status=OPTIMAL,
    )
    duals = DualSolution(
        alpha=alpha,
        link_duals={s: float(-y[n + k]) for k, s in enumerate(links)},
        objective=res.objective,
        status=OPTIMAL,
    )
    return sol, duals


def _ban(model: RmpModel, kind: str, key: tuple[int, int]) -> None:
    if kind == "omega":
        model.swaps.pop(key, None)
        model.banned_swaps.add(key)
    else:
        model.banned_levels.add(key)


def strip_active_doi(model: RmpModel, solution: RmpSolution | DualSolution,
                     tol: float = 1e-6) -> tuple[RmpModel, int]:
    """Delete and ban DOI variables that are active (or on an unbounded ray)."""
    if isinstance(solution, DualSolution):
        targets = solution.ray_support
    elif solution.status == UNBOUNDED:
        raise ValueError("pass the DualSolution of an unbounded master to strip its ray")
    else:
        targets = solution.active_doi(tol)
    for kind, key in targets:
        _ban(model, kind, key)
    return model, len(targets)


def write_lp(model: RmpModel, plain: bool = False) -> str:
    """The master in CPLEX LP text format."""
    c, a, senses, b, swaps, links = _assemble(model, plain)
    names = [f"theta_{j}" for j in range(len(model.columns))]
    names += [f"omega_{u}_{v}" for u, v in swaps]
    names += [f"xi_{u}_{g}" for u, g in links]

    def expr(coefs, idx):
        parts = []
        for k, (v, i) in enumerate(zip(coefs, idx)):
            sign = "-" if v < 0 else ("+" if k else "")
            parts.append(f"{sign} {abs(v):.12g} {names[i]}".strip())
        return " ".join(parts) if parts else "0 " + names[0]

    nz = np.flatnonzero(c)
    lines = ["\\ restricted master, mode " + ("none" if plain else model.mode), "Minimize",
             " obj: " + expr(c[nz], nz), "Subject To"]
    a = a.tocsr()
    row_names = [f"cover_{u}" for u in model.inst.customers] + [f"link_{u}_{g}" for u, g in links]
    for r in range(a.shape[0]):
        lo, hi = a.indptr[r], a.indptr[r + 1]
        op = {">=": ">=", "<=": "<=", "=": "="}[senses[r]]
        lines.append(f" {row_names[r]}: {expr(a.data[lo:hi], a.indices[lo:hi])} {op} {b[r]:.12g}")
    lines += ["End", ""]
    return "\n".join(lines)
