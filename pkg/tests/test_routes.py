import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from sfdoi_cvrp.instance import Instance, Neighborhoods, build_neighborhoods
from sfdoi_cvrp.routes import (
    is_elementary, is_ng_feasible, make_route, remove, route_cost, singleton_routes, swap,
)

from conftest import A, B, E, END
import oracles


def test_t4_route_costs(t4):
    assert route_cost(t4, (0, A, B, END)) == 12
    assert route_cost(t4, (0, END)) == 0
    assert route_cost(t4.with_fixed_cost(10), (0, A, B, END)) == 22
    assert route_cost(t4.with_fixed_cost(Fraction(1, 3)), (0, END)) == Fraction(1, 3)


def test_route_cost_rejects_bad_shapes(t4):
    for bad in [(0, A, 0, END), (0, A, B), (A, B, END), (0, END, A, END), (0, 9, END)]:
        with pytest.raises(ValueError):
            route_cost(t4, bad)


def test_swap_t4(t4):
    r = make_route(t4, (0, A, B, END))
    s = swap(t4, r, A, E)
    assert s.visits == (0, E, B, END) and s.cost == 17
    single = swap(t4, make_route(t4, (0, A, END)), A, B)
    assert single.cost == t4.dist[0, B] + t4.dist[B, END]


def test_swap_preconditions(t4):
    r = make_route(t4, (0, A, B, END))
    with pytest.raises(ValueError):
        swap(t4, r, A, B)  # v already on the route
    with pytest.raises(ValueError):
        swap(t4, r, E, A)  # u absent
    uneven = Instance.from_coords((0, 0), [(0, 3), (4, 0)], [1, 2], 10)
    with pytest.raises(ValueError):
        swap(uneven, make_route(uneven, (0, 1, 3)), 1, 2)  # d_u < d_v


def test_swap_on_repeated_customer_needs_position():
    inst = Instance.from_coords((0, 0), [(0, 3), (4, 0), (9, 9)], [1, 1, 1], 10)
    r = make_route(inst, (0, 1, 2, 1, 4))
    with pytest.raises(ValueError):
        swap(inst, r, 1, 3)
    assert swap(inst, r, 1, 3, position=3).visits == (0, 1, 2, 3, 4)


def test_remove_t4(t4):
    r = make_route(t4, (0, A, B, END))
    assert remove(t4, r, {1}).visits == (0, B, END)
    assert remove(t4, r, {1}).cost == 8
    assert remove(t4, r, {1, 2}).visits == (0, END)
    for bad in ({0}, {3}, {-1}):
        with pytest.raises(ValueError):
            remove(t4, r, bad)


def _ng(sets):
    return Neighborhoods(tuple([frozenset()] + [frozenset(s) for s in sets]), 1)


def test_ng_feasibility_examples(t4):
    u, v = 1, 2
    cyc = make_route(t4, (0, u, v, u, END))
    assert not is_ng_feasible(t4, cyc, _ng([{v}, {u}, {u}]))  # u in N_v
    assert is_ng_feasible(t4, cyc, _ng([{v}, {E}, {u}]))  # u not in N_v
    # removing v leaves a back-to-back repeat that no neighborhood can admit
    back = remove(t4, cyc, {2})
    assert back.visits == (0, u, u, END)
    assert not is_ng_feasible(t4, back, _ng([{E}, {E}, {u}]))
    assert not is_elementary(t4, cyc)
    assert is_elementary(t4, make_route(t4, (0, A, B, END)))


def test_capacity_enforced():
    inst = Instance.from_coords((0, 0), [(1, 0), (2, 0)], [3, 3], 5)
    r = make_route(inst, (0, 1, 2, 3))
    assert not is_elementary(inst, r)
    assert not is_ng_feasible(inst, r, build_neighborhoods(inst, 1))


def test_key_is_orientation_free(t4):
    assert make_route(t4, (0, A, B, END)).key == make_route(t4, (0, B, A, END)).key
    assert len(make_route(t4, (0, A, B, E, END))) == 3
    assert [r.visits for r in singleton_routes(t4)] == [(0, A, END), (0, B, END), (0, E, END)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 7))
def test_swap_cost_delta_uses_neighbouring_arcs(seed, n):
    rng = np.random.default_rng(seed)
    inst = oracles.random_instance(rng, n, max_demand=1, capacity=n, fixed_cost=3)
    d = inst.dist
    perm = [int(x) for x in rng.permutation(np.arange(1, n + 1))]
    k = int(rng.integers(1, n))
    visits = (0, *perm[:k], inst.end_depot)
    route = make_route(inst, visits)
    outside = perm[k:]
    pos = int(rng.integers(1, k + 1))
    u, v = visits[pos], outside[0]
    new = swap(inst, route, u, v)
    prv, nxt = visits[pos - 1], visits[pos + 1]
    assert new.cost - route.cost == (d[prv, v] - d[prv, u]) + (d[v, nxt] - d[u, nxt])
    assert new.cost == oracles.route_cost(inst, new.visits)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_ng_recurrence_matches_pairwise_definition(seed, n):
    rng = np.random.default_rng(seed)
    inst = oracles.random_instance(rng, n, max_demand=1, capacity=2 * n)
    ng = build_neighborhoods(inst, int(rng.integers(1, n)) if n > 1 else 1) if n > 1 else None
    if ng is None:
        return
    dem = [int(x) for x in inst.demand]
    for _ in range(30):
        length = int(rng.integers(1, 2 * n + 1))
        visits = (0, *[int(x) for x in rng.integers(1, n + 1, size=length)], inst.end_depot)
        r = make_route(inst, visits)
        assert is_ng_feasible(inst, r, ng) == oracles.ng_feasible_pairwise(
            visits, ng, dem, inst.capacity)
        if is_elementary(inst, r):
            assert is_ng_feasible(inst, r, ng)
