"""Pricing over ng-routes by label-setting dynamic programming.

Labels are swept in order of increasing load. Because every customer has a
positive demand, all labels that could dominate a label of load ``q`` are
settled before the sweep reaches ``q``. Dominance needs ``rc1 <= rc2``,
``load1 <= load2`` and ``M1 ⊆ M2``; since a label's memory at node ``w``
is a subset of ``N_w ∪ {w}``, settled labels are summarized per node by
the least reduced cost per memory pattern and a candidate is tested
against all submasks of its own pattern.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .instance import Instance, Neighborhoods, build_neighborhoods
from .routes import Route, make_route

__all__ = [
    "Label",
    "price_ng",
    "price_elementary_bruteforce",
    "enumerate_ng_routes",
    "reduced_cost",
    "dominates",
    "warmup",
]

log = logging.getLogger(__name__)

# ng-sets larger than this switch the dominance store from a dense
# (node, submask) table to per-node lists
_TABLE_MAX_NG = 14
_MAX_LABELS = 20_000_000


@dataclass(frozen=True)
class Label:
    node: int
    load: int
    memory: frozenset
    rcost: float
    parent: "Label | None" = None


def dominates(a: Label, b: Label) -> bool:
    """True iff ``a`` dominates ``b`` at a common node."""
    if a.node != b.node:
        return False
    if not (a.rcost <= b.rcost and a.load <= b.load and a.memory <= b.memory):
        return False
    return a.rcost < b.rcost or a.load < b.load or a.memory < b.memory


def reduced_cost(route: Route, alpha: Sequence[float]) -> float:
    return float(route.cost) - sum(float(alpha[u]) * a for u, a in route.visit_count.items())


@njit(cache=True)
def _compact(w, mask, nbr, ng):
    c = 0
    for k in range(ng):
        if (mask >> (nbr[w, k] - 1)) & 1:
            c |= 1 << k
    return c


@njit(cache=True)
def _dominated(w, mask, rc, use_table, best, nbr, ng, acc_head, acc_next, l_rc, l_mask):
    if use_table:
        c = _compact(w, mask, nbr, ng)
        s = c
        while True:
            if best[w, s] <= rc:
                return True
            if s == 0:
                return False
            s = (s - 1) & c
    j = acc_head[w]
    while j != -1:
        if l_rc[j] <= rc and (l_mask[j] & ~mask) == 0:
            return True
        j = acc_next[j]
    return False


@njit(cache=True)
def _grow(a, size):
    out = np.empty(size, a.dtype)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _ng_labeling(dist, demand, capacity, alpha, fixed, nbmask, nbr, ng,
                 use_table, use_dominance, max_labels):
    n = demand.shape[0] - 2
    end = n + 1
    size = 4096
    l_node = np.empty(size, np.int64)
    l_load = np.empty(size, np.int64)
    l_mask = np.empty(size, np.int64)
    l_rc = np.empty(size, np.float64)
    l_parent = np.empty(size, np.int64)
    l_next = np.empty(size, np.int64)
    acc_next = np.empty(size, np.int64)
    head = np.full(capacity + 1, -1, np.int64)
    acc_head = np.full(n + 1, -1, np.int64)
    if use_table:
        best = np.full((n + 1, 1 << ng), np.inf)
    else:
        best = np.full((1, 1), np.inf)
    cand_idx = np.empty(256, np.int64)
    cand_rc = np.empty(256, np.float64)
    ncand = 0

    l_node[0] = 0
    l_load[0] = 0
    l_mask[0] = 0
    l_rc[0] = fixed
    l_parent[0] = -1
    l_next[0] = -1
    head[0] = 0
    count = 1
    overflow = False

    for lam in range(capacity + 1):
        idx = head[lam]
        while idx != -1:
            nxt = l_next[idx]
            node = l_node[idx]
            rc = l_rc[idx]
            mask = l_mask[idx]
            if node != 0:
                if use_dominance and _dominated(node, mask, rc, use_table, best, nbr, ng,
                                                acc_head, acc_next, l_rc, l_mask):
                    idx = nxt
                    continue
                if use_table:
                    c = _compact(node, mask, nbr, ng)
                    if rc < best[node, c]:
                        best[node, c] = rc
                else:
                    acc_next[idx] = acc_head[node]
                    acc_head[node] = idx
                total = rc + dist[node, end]
                if total < 0.0:
                    if ncand == cand_idx.shape[0]:
                        cand_idx = _grow(cand_idx, 2 * ncand)
                        cand_rc = _grow(cand_rc, 2 * ncand)
                    cand_idx[ncand] = idx
                    cand_rc[ncand] = total
                    ncand += 1
            for w in range(1, n + 1):
                if (mask >> (w - 1)) & 1:
                    continue
                nl = lam + demand[w]
                if nl > capacity:
                    continue
                nrc = rc + dist[node, w] - alpha[w]
                nmask = (mask & nbmask[w]) | (1 << (w - 1))
                if use_dominance and _dominated(w, nmask, nrc, use_table, best, nbr, ng,
                                                acc_head, acc_next, l_rc, l_mask):
                    continue
                if count == size:
                    if size >= max_labels:
                        overflow = True
                        break
                    size *= 2
                    l_node = _grow(l_node, size)
                    l_load = _grow(l_load, size)
                    l_mask = _grow(l_mask, size)
                    l_rc = _grow(l_rc, size)
                    l_parent = _grow(l_parent, size)
                    l_next = _grow(l_next, size)
                    acc_next = _grow(acc_next, size)
                l_node[count] = w
                l_load[count] = nl
                l_mask[count] = nmask
                l_rc[count] = nrc
                l_parent[count] = idx
                l_next[count] = head[nl]
                head[nl] = count
                count += 1
            if overflow:
                break
            idx = nxt
        if overflow:
            break

    return l_node[:count], l_parent[:count], cand_idx[:ncand], cand_rc[:ncand], overflow


def _kernel_inputs(inst: Instance, ng: Neighborhoods, alpha):
    n = inst.n_customers
    if n > 62:
        raise ValueError("labeling supports at most 62 customers")
    alpha_full = np.zeros(n + 2)
    alpha_full[1 : n + 1] = np.asarray(alpha, dtype=float)[1 : n + 1]
    width = max(ng.ng_size, 1)
    nbr = np.ones((n + 1, width), dtype=np.int64)
    nbmask = np.zeros(n + 1, dtype=np.int64)
    for w in range(1, n + 1):
        order = ng.order[w] if ng.order else tuple(sorted(ng[w]))
        for k, v in enumerate(order):
            nbr[w, k] = v
            nbmask[w] |= 1 << (v - 1)
    return alpha_full, nbr, nbmask, ng.ng_size


def price_ng(
    inst: Instance,
    ng: Neighborhoods,
    alpha: Sequence[float],
    max_cols: int = 30,
    dominance: bool = True,
) -> list[tuple[Route, float]]:
    """Negative reduced-cost ng-routes, ascending, at most ``max_cols`` of them.

    ``alpha`` is indexed by node; entries 0 and ``N + 1`` are ignored. The
    first entry always attains the exact minimum over all ng-routes.
    """
    alpha_full, nbr, nbmask, ngs = _kernel_inputs(inst, ng, alpha)
    if not np.all(np.isfinite(alpha_full)):
        raise ValueError("duals must be finite")
    use_table = ngs <= _TABLE_MAX_NG
    nodes, parents, cand_idx, cand_rc, overflow = _ng_labeling(
        inst.dist.astype(np.float64), inst.demand.astype(np.int64), int(inst.capacity),
        alpha_full, float(inst.fixed_cost), nbmask, nbr, ngs,
        use_table, dominance, _MAX_LABELS,
    )
    if overflow:
        raise RuntimeError("label storage exhausted")

    order = np.lexsort((cand_idx, cand_rc))
    out: list[tuple[Route, float]] = []
    seen = set()
    end = inst.end_depot
    for k in order:
        path = []
        j = int(cand_idx[k])
        while j > 0:
            path.append(int(nodes[j]))
            j = int(parents[j])
        route = make_route(inst, (0, *reversed(path), end))
        if route.key in seen:
            continue
        seen.add(route.key)
        out.append((route, reduced_cost(route, alpha_full)))
        if len(out) >= max_cols:
            break
    out.sort(key=lambda t: (t[1], t[0].visits))
    return [t for t in out if t[1] < 0]


def warmup() -> None:
    """Compile (or load from cache) the labeling kernel so that timings exclude it."""
    inst = Instance.from_coords((0, 0), [(0, 3), (4, 0), (0, 6)], [1, 1, 1], 10)
    price_ng(inst, build_neighborhoods(inst, 1), np.array([0.0, 100.0, 0.0, 0.0, 0.0]))


def price_elementary_bruteforce(inst: Instance, alpha: Sequence[float]) -> tuple[Route, float]:
    """Exhaustive minimum reduced-cost elementary route (nonempty)."""
    n = inst.n_customers
    if n > 10:
        raise ValueError("brute-force pricing is limited to 10 customers")
    d, dem, cap, end = inst.dist, inst.demand, inst.capacity, inst.end_depot
    alpha = [float(a) for a in alpha]
    best: list = [None, np.inf]
    fixed = float(inst.fixed_cost)

    def dfs(path, load, partial):
        last = path[-1]
        if len(path) > 1:
            total = partial + d[last, end]
            if total < best[1]:
                best[0], best[1] = list(path), total
        for w in range(1, n + 1):
            if w in path or load + dem[w] > cap:
                continue
            path.append(w)
            dfs(path, load + dem[w], partial + d[last, w] - alpha[w])
            path.pop()

    dfs([0], 0, fixed)
    route = make_route(inst, (*best[0], end))
    return route, reduced_cost(route, alpha)


def enumerate_ng_routes(inst: Instance, ng: Neighborhoods, max_len: int) -> set[tuple[int, ...]]:
    """All ng-feasible visit sequences with at most ``max_len`` customer visits."""
    n = inst.n_customers
    if n > 8:
        raise ValueError("ng-route enumeration is limited to 8 customers")
    dem, cap, end = inst.demand, inst.capacity, inst.end_depot
    out: set[tuple[int, ...]] = set()
    if max_len < 0:
        return out

    def dfs(path, load, memory):
        out.add((*path, end))
        if len(path) - 1 >= max_len:
            return
        for w in range(1, n + 1):
            if w in memory or load + dem[w] > cap:
                continue
            path.append(w)
            dfs(path, load + dem[w], (memory & ng[w]) | {w})
            path.pop()

    dfs([0], 0, frozenset())
    return out

