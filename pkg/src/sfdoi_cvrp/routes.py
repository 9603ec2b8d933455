"""Routes as depot-to-depot visit sequences plus the swap/remove algebra."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .instance import Instance, Neighborhoods

__all__ = [
    "Route",
    "make_route",
    "route_cost",
    "swap",
    "remove",
    "is_ng_feasible",
    "is_elementary",
    "singleton_routes",
]


@dataclass(frozen=True)
class Route:
    visits: tuple[int, ...]
    cost: Fraction

    @property
    def interior(self) -> tuple[int, ...]:
        return self.visits[1:-1]

    @cached_property
    def visit_count(self) -> Counter:
        """``a_ul``: multiplicity of each customer on the route."""
        return Counter(self.interior)

    def load(self, inst: Instance) -> int:
        return int(sum(int(inst.demand[u]) for u in self.interior))

    @property
    def key(self) -> tuple[int, ...]:
        """Orientation-free identity; a route and its reverse are the same column."""
        inner = self.interior
        return min(inner, inner[::-1])

    def __len__(self) -> int:
        return len(self.visits) - 2

    def __str__(self) -> str:
        return "-".join(map(str, self.visits))


def _check_shape(inst: Instance, visits: Sequence[int]) -> None:
    end = inst.end_depot
    if len(visits) < 2 or visits[0] != 0 or visits[-1] != end:
        raise ValueError(f"route must run from depot 0 to depot {end}: {tuple(visits)}")
    for u in visits[1:-1]:
        if not 1 <= u <= inst.n_customers:
            raise ValueError(f"interior node {u} is not a customer")


def route_cost(inst: Instance, visits: Sequence[int]) -> Fraction:
    _check_shape(inst, visits)
    d = inst.dist
    arcs = sum(int(d[a, b]) for a, b in zip(visits, visits[1:]))
    return inst.fixed_cost + arcs


def make_route(inst: Instance, visits: Iterable[int]) -> Route:
    visits = tuple(int(v) for v in visits)
    return Route(visits, route_cost(inst, visits))


def singleton_routes(inst: Instance) -> list[Route]:
    return [make_route(inst, (0, u, inst.end_depot)) for u in inst.customers]


def swap(inst: Instance, route: Route, u: int, v: int, position: int | None = None) -> Route:
    """Replace customer ``u`` by ``v``.

    ``position`` indexes ``route.visits``; it is required when ``u`` occurs
    more than once.
    """
    count = route.visit_count
    if count[u] == 0:
        raise ValueError(f"customer {u} is not on route {route}")
    if count[v] > 0:
        raise ValueError(f"customer {v} is already on route {route}")
    if inst.demand[u] < inst.demand[v]:
        raise ValueError(f"swap needs d_u >= d_v, got d_{u}={inst.demand[u]} < d_{v}={inst.demand[v]}")
    if position is None:
        if count[u] > 1:
            raise ValueError(f"customer {u} repeats on {route}; pass a position")
        position = route.visits.index(u)
    elif route.visits[position] != u:
        raise ValueError(f"position {position} does not hold customer {u}")
    visits = list(route.visits)
    visits[position] = v
    return make_route(inst, visits)


def remove(inst: Instance, route: Route, positions: Iterable[int]) -> Route:
    """Delete the interior visits at ``positions`` (indices into ``route.visits``)."""
    drop = set(positions)
    for p in drop:
        if not 1 <= p <= len(route):
            raise ValueError(f"position {p} is not an interior index of {route}")
    return make_route(inst, (w for i, w in enumerate(route.visits) if i not in drop))


def is_elementary(inst: Instance, route: Route) -> bool:
    if any(c > 1 for c in route.visit_count.values()):
        return False
    return route.load(inst) <= inst.capacity


def is_ng_feasible(inst: Instance, route: Route, ng: Neighborhoods) -> bool:
    if route.load(inst) > inst.capacity:
        return False
    memory: frozenset[int] = frozenset()
    for w in route.interior:
        if w in memory:
            return False
        memory = (memory & ng[w]) | {w}
    return True
