"""Swap bounds (smooth DOI) and per-route rebates (flexible DOI) for CVRP.

Swap bounds ``rho[u, v]`` cap how much any elementary route can get dearer
when customer ``u`` is replaced by ``v``; they exist only for ``d_u >= d_v``.
Rebates ``sigma[u]`` of a route cap the saving credited for dropping ``u``
from it. Both are exact for elementary routes and are used as relaxed
inequalities over ng-routes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from .instance import Instance
from .qp import min_norm_active_set
from .routes import Route

__all__ = [
    "SwapBounds",
    "RebateProfile",
    "SigmaGrid",
    "sdoi_easy",
    "sdoi_tight",
    "swap_bounds",
    "select_sdoi",
    "block_deltas",
    "fdoi_easy",
    "fdoi_tight_lp",
    "fdoi_tight_qp",
    "sigma_grid",
    "singleton_savings",
    "round_down_sigma",
    "rebate_profile",
]

DELTA = 0.999


def _check_pair(inst: Instance, u: int, v: int) -> None:
    if u == v:
        raise ValueError("swap pair needs u != v")
    if inst.demand[u] < inst.demand[v]:
        raise ValueError(f"pair ({u}, {v}) is not admissible: d_u < d_v")


def sdoi_easy(inst: Instance, u: int, v: int) -> int:
    _check_pair(inst, u, v)
    return 2 * int(inst.dist[u, v])


def sdoi_tight(inst: Instance, u: int, v: int) -> int:
    """Largest cost increase of replacing ``u`` by ``v`` between any predecessor/successor pair."""
    _check_pair(inst, u, v)
    d = inst.dist
    end = inst.end_depot
    gain_in = d[:, v] - d[:, u]  # predecessor side
    gain_out = d[v, :] - d[u, :]  # successor side
    table = gain_in[:, None] + gain_out[None, :]
    pred = np.ones(end + 1, bool)
    pred[[end, u, v]] = False
    succ = np.ones(end + 1, bool)
    succ[[0, u, v]] = False
    table = np.where(pred[:, None] & succ[None, :], table, np.iinfo(np.int64).min)
    np.fill_diagonal(table, np.iinfo(np.int64).min)
    return int(table.max())


@dataclass(frozen=True)
class SwapBounds:
    rho: dict[tuple[int, int], int]

    @cached_property
    def _by_customer(self):
        out_of, into = {}, {}
        for (u, v) in sorted(self.rho):
            out_of.setdefault(u, []).append((u, v))
            into.setdefault(v, []).append((u, v))
        return out_of, into

    def out_of(self, u: int) -> list[tuple[int, int]]:
        """``S^-_u``: swaps that give up ``u``."""
        return self._by_customer[0].get(u, [])

    def into(self, u: int) -> list[tuple[int, int]]:
        """``S^+_u``: swaps that bring in ``u``."""
        return self._by_customer[1].get(u, [])

    def __len__(self) -> int:
        return len(self.rho)

    def __contains__(self, pair) -> bool:
        return pair in self.rho


def swap_bounds(inst: Instance, variant: str = "tight") -> SwapBounds:
    fn = {"tight": sdoi_tight, "easy": sdoi_easy}[variant]
    rho = {}
    for u in inst.customers:
        for v in inst.customers:
            if u != v and inst.demand[u] >= inst.demand[v]:
                rho[(u, v)] = fn(inst, u, v)
    return SwapBounds(rho)


def select_sdoi(bounds: SwapBounds, k: int) -> SwapBounds:
    """Keep the ``k`` smallest bounds leaving and entering each customer."""
    if k < 1:
        raise ValueError("k must be positive")
    keep = set()
    customers = {u for pair in bounds.rho for u in pair}
    for u in customers:
        for pairs in (bounds.out_of(u), bounds.into(u)):
            keep.update(sorted(pairs, key=lambda s: (bounds.rho[s], s))[:k])
    return SwapBounds({s: bounds.rho[s] for s in sorted(keep)})


def block_deltas(inst: Instance, route: Route) -> dict[tuple[int, int], int]:
    """Cost change of cutting out each contiguous block of visits.

    Key ``(i, j)`` removes positions ``i .. i + j`` and joins ``i - 1`` to
    ``i + j + 1`` directly.
    """
    d = inst.dist
    w = route.visits
    m = len(route)
    arc = np.array([int(d[a, b]) for a, b in zip(w, w[1:])], dtype=np.int64)
    prefix = np.concatenate([[0], np.cumsum(arc)])
    out = {}
    for i in range(1, m + 1):
        for j in range(0, m - i + 1):
            # arcs (i-1 -> i) .. (i+j -> i+j+1) are arc[i-1 .. i+j]
            out[(i, j)] = int(d[w[i - 1], w[i + j + 1]]) - int(prefix[i + j + 1] - prefix[i - 1])
    return out


@dataclass(frozen=True)
class RebateProfile:
    """Rebates of one route, keyed by customer."""

    sigma: dict[int, float]
    position_sigma: tuple[float, ...] = ()
    level: dict[int, int] | None = None
    fallback: bool = False

    @property
    def rounded(self) -> bool:
        return self.level is not None

    def total(self, route: Route) -> float:
        return sum(a * self.sigma.get(u, 0.0) for u, a in route.visit_count.items())

    def beta(self, u: int, g: int) -> int:
        return int(self.level is not None and self.level.get(u) == g)


def _smallest_value_rule(route: Route, per_position) -> dict[int, float]:
    sigma: dict[int, float] = {}
    for u, s in zip(route.interior, per_position):
        s = max(float(s), 0.0)
        sigma[u] = min(sigma.get(u, s), s)
    return sigma


def fdoi_easy(inst: Instance, route: Route) -> RebateProfile:
    """Cheapest single-visit removal over all order-respecting bypasses."""
    d = inst.dist
    w = route.visits
    m = len(route)
    per_pos = []
    for k in range(1, m + 1):
        u = w[k]
        best = min(
            int(d[w[i], u]) + int(d[u, w[j]]) - int(d[w[i], w[j]])
            for i in range(0, k)
            for j in range(k + 1, m + 2)
        )
        per_pos.append(float(max(best, 0)))
    return RebateProfile(_smallest_value_rule(route, per_pos), tuple(per_pos))


def _block_system(inst: Instance, route: Route):
    m = len(route)
    nu = block_deltas(inst, route)
    rows = np.zeros((len(nu), m))
    rhs = np.zeros(len(nu))
    for r, ((i, j), val) in enumerate(sorted(nu.items())):
        rows[r, i - 1 : i + j] = 1.0
        # rounding can push a block delta above zero; clamp so sigma = 0 stays feasible
        rhs[r] = -min(val, 0)
    return rows, rhs


def fdoi_tight_lp(inst: Instance, route: Route) -> tuple[np.ndarray, float]:
    """Per-position rebates maximizing their sum under the block constraints."""
    m = len(route)
    if m == 0:
        return np.zeros(0), 0.0
    rows, rhs = _block_system(inst, route)
    res = linprog(-np.ones(m), A_ub=rows, b_ub=rhs, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"rebate LP failed: {res.message}")
    x = np.maximum(res.x, 0.0)
    return x, float(-res.fun)


def fdoi_tight_qp(inst: Instance, route: Route, delta: float = DELTA) -> RebateProfile:
    """Least-norm rebates within a factor ``delta`` of the rebate LP optimum."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    m = len(route)
    if m == 0:
        return RebateProfile({}, ())
    x_lp, z = fdoi_tight_lp(inst, route)
    rows, rhs = _block_system(inst, route)
    G = np.vstack([rows, -np.eye(m), -np.ones((1, m))])
    h = np.concatenate([rhs, np.zeros(m), [-delta * z]])
    x, _, _, ok = min_norm_active_set(G, h, x_lp)
    fallback = not ok
    if fallback:
        x = delta * x_lp
    x = np.maximum(x, 0.0)
    return RebateProfile(_smallest_value_rule(route, x), tuple(float(v) for v in x),
                         fallback=fallback)


@dataclass(frozen=True)
class SigmaGrid:
    """Evenly spaced rebate levels ``g * step[u]`` for ``g = 1, 2, ...`` (index 0 unused).

    The grid is anchored so that ``n_levels`` steps reach the largest rebate
    seen for ``u`` when it was built; larger rebates simply land on higher
    levels, so existing levels never move.
    """

    step: tuple[float, ...]
    n_levels: int = 10

    def value(self, u: int, g: int) -> float:
        return g * self.step[u]

    def level_of(self, u: int, s: float) -> int:
        """Largest ``g`` with ``g * step[u] <= s`` (0 if none)."""
        h = self.step[u]
        if h <= 0 or s < h:
            return 0
        g = int(math.floor(s / h))
        while g > 0 and g * h > s:
            g -= 1
        while (g + 1) * h <= s:
            g += 1
        return g

    def __getitem__(self, u: int) -> tuple[float, ...]:
        """The first ``n_levels`` levels of ``u``."""
        if self.step[u] <= 0:
            return ()
        return tuple(self.value(u, g) for g in range(1, self.n_levels + 1))


def singleton_savings(inst: Instance) -> np.ndarray:
    """Per customer, the saving of dropping it from its singleton route."""
    d = inst.dist.astype(np.int64)
    end = inst.end_depot
    out = np.zeros(end + 1)
    for u in inst.customers:
        out[u] = max(int(d[0, u] + d[u, end] - d[0, end]), 0)
    return out


def sigma_grid(inst: Instance, n_levels: int = 10, top=None) -> SigmaGrid:
    """Grid whose ``n_levels``-th level for ``u`` equals ``top[u]``.

    ``top`` defaults to the singleton-route savings, which are the rebates
    observed on the initial columns.
    """
    if n_levels < 1:
        raise ValueError("need at least one rebate level")
    top = singleton_savings(inst) if top is None else np.asarray(top, dtype=float)
    step = [0.0] + [max(float(top[u]), 0.0) / n_levels for u in inst.customers]
    return SigmaGrid(tuple(step), n_levels)


def round_down_sigma(profile: RebateProfile, grid: SigmaGrid) -> RebateProfile:
    """Snap each rebate down to the grid; below the first level it becomes zero."""
    sigma, level = {}, {}
    for u, s in profile.sigma.items():
        g = grid.level_of(u, s)
        if g > 0:
            sigma[u] = grid.value(u, g)
            level[u] = g
        else:
            sigma[u] = 0.0
    return replace(profile, sigma=sigma, level=level)


def rebate_profile(inst: Instance, route: Route, variant: str = "tight",
                   delta: float = DELTA) -> RebateProfile:
    if variant == "tight":
        return fdoi_tight_qp(inst, route, delta)
    if variant == "easy":
        return fdoi_easy(inst, route)
    raise ValueError(f"unknown rebate variant {variant!r}")
