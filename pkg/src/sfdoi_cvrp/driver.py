"""Column generation over ng-routes with relaxed DOI removal and restarts."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .doi import SigmaGrid, rebate_profile, round_down_sigma, select_sdoi, sigma_grid, swap_bounds
from .instance import Instance, Neighborhoods, build_neighborhoods
from .lp import UNBOUNDED
from .pricing import price_ng
from .rmp import RmpModel, add_column, build_rmp, normalize_mode, solve_rmp, strip_active_doi
from .routes import Route, singleton_routes

__all__ = [
    "RunConfig",
    "TraceRow",
    "CgTrace",
    "RunResult",
    "lower_bound",
    "cg_solve",
    "removal_loop",
    "solve",
]

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    doi_mode: str = "none"
    ng_size: int = 5
    sdoi_k: int = 10
    sigma_levels: int = 10
    delta: float = 0.999
    epsilon: float = 1e-6
    max_cols: int = 30
    time_limit: float | None = None
    sdoi_variant: str = "tight"
    fdoi_variant: str = "tight"
    active_tol: float = 1e-6

    def __post_init__(self):
        self.doi_mode = normalize_mode(self.doi_mode)


@dataclass
class TraceRow:
    restart: int
    iteration: int
    time_s: float
    rmp_obj: float
    lower_bound: float
    min_rc: float
    n_cols: int
    n_active_doi: int
    phase: str = "cg"


@dataclass
class CgTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def iterations(self) -> int:
        return len(self.rows)

    def best_lower_bound(self) -> float:
        return max((r.lower_bound for r in self.rows), default=-math.inf)

    def gaps(self) -> list[float]:
        """Relative gap of each iterate against the running best lower bound."""
        out, best = [], -math.inf
        for r in self.rows:
            best = max(best, r.lower_bound)
            out.append((r.rmp_obj - best) / max(abs(r.rmp_obj), 1e-12))
        return out


@dataclass
class RunResult:
    value: float
    model: RmpModel
    trace: CgTrace
    certified: bool
    restarts: int = 0
    removed_doi: int = 0
    unbounded_events: int = 0
    elapsed: float = 0.0
    timed_out: bool = False

    @property
    def columns(self) -> list[Route]:
        return [c.route for c in self.model.columns]

    @property
    def iterations(self) -> int:
        return self.trace.iterations


def lower_bound(rmp_objective: float, min_reduced_cost: float, kappa: int) -> float:
    return rmp_objective + kappa * min(0.0, min_reduced_cost)


class _Clock:
    def __init__(self, limit: float | None):
        self.t0 = time.perf_counter()
        self.limit = limit

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def expired(self) -> bool:
        return self.limit is not None and self.elapsed() > self.limit


class _Timeout(Exception):
    pass


@dataclass
class _State:
    inst: Instance
    ng: Neighborhoods
    config: RunConfig
    model: RmpModel
    trace: CgTrace
    clock: _Clock
    restart: int = 0
    unbounded: int = 0


def _profile(state: _State, route: Route):
    if not state.model.uses_rebates:
        return None
    cfg = state.config
    prof = rebate_profile(state.inst, route, cfg.fdoi_variant, cfg.delta)
    return round_down_sigma(prof, state.model.grid)


def _add(state: _State, routes) -> int:
    added = 0
    for r in routes:
        if r not in state.model:
            add_column(state.model, r, _profile(state, r))
            added += 1
    return added


def _cg_pass(state: _State):
    """One column-generation pass on the current (DOI) master."""
    cfg = state.config
    inst = state.inst
    while True:
        if state.clock.expired():
            raise _Timeout
        sol, duals = solve_rmp(state.model)
        if duals.status == UNBOUNDED:
            _, k = strip_active_doi(state.model, duals)
            state.unbounded += 1
            log.info("unbounded master: removed %d DOI on the ray", k)
            if k == 0:
                raise RuntimeError("unbounded master without DOI on the ray")
            continue
        cols = price_ng(inst, state.ng, duals.alpha, cfg.max_cols)
        min_rc = cols[0][1] if cols else 0.0
        state.trace.rows.append(TraceRow(
            restart=state.restart,
            iteration=len(state.trace.rows),
            time_s=state.clock.elapsed(),
            rmp_obj=duals.objective,
            lower_bound=lower_bound(duals.objective, min_rc, inst.vehicle_bound),
            min_rc=min_rc,
            n_cols=len(state.model.columns),
            n_active_doi=len(sol.active_doi(cfg.active_tol)),
        ))
        new = [r for r, rc in cols if rc < -cfg.epsilon]
        if not new or _add(state, new) == 0:
            return sol, duals


def _plain_dual_optimal(model: RmpModel, alpha: np.ndarray, plain_value: float,
                        tol: float = 1e-7) -> bool:
    """Whether ``alpha`` is an optimal dual of the plain cover master over the current columns."""
    if abs(float(alpha.sum()) - plain_value) > tol * max(1.0, abs(plain_value)):
        return False
    for col in model.columns:
        rc = float(col.route.cost) - sum(alpha[u] * a for u, a in col.route.visit_count.items())
        if rc < -tol * max(1.0, float(col.route.cost)):
            return False
    return True


def _initial_state(inst: Instance, ng: Neighborhoods, config: RunConfig) -> _State:
    mode = config.doi_mode
    bounds = None
    if mode in ("S", "SF"):
        bounds = select_sdoi(swap_bounds(inst, config.sdoi_variant), config.sdoi_k)
    singles = singleton_routes(inst)
    grid: SigmaGrid | None = None
    if mode in ("F", "SF"):
        # anchor the grid on the rebates of the initial columns
        top = np.zeros(inst.end_depot + 1)
        for r in singles:
            prof = rebate_profile(inst, r, config.fdoi_variant, config.delta)
            top[r.interior[0]] = prof.sigma.get(r.interior[0], 0.0)
        grid = sigma_grid(inst, config.sigma_levels, top)
    model = build_rmp(inst, [], bounds, mode, grid)
    state = _State(inst, ng, config, model, CgTrace(), _Clock(config.time_limit))
    _add(state, singles)
    return state


def cg_solve(inst: Instance, ng: Neighborhoods, config: RunConfig):
    """A single CG pass from singleton routes; returns ``(value, routes, trace)``.

    The value is the master optimum for the DOI set in force, with no
    removal of active DOI.
    """
    state = _initial_state(inst, ng, config)
    _, duals = _cg_pass(state)
    return duals.objective, [c.route for c in state.model.columns], state.trace


def removal_loop(inst: Instance, ng: Neighborhoods, config: RunConfig) -> RunResult:
    """CG with active-DOI removal and restarts, closed by a certification pass."""
    state = _initial_state(inst, ng, config)
    cfg = state.config
    model = state.model
    removed = 0
    strips = 0
    value = math.nan
    certified = False
    timed_out = False
    try:
        while True:
            sol, duals = _cg_pass(state)
            if model.mode == "none":
                value, certified = duals.objective, True
                break
            _, k = strip_active_doi(model, sol, cfg.active_tol)
            if k:
                removed += k
                strips += 1
                if strips > model.doi_created:
                    raise RuntimeError("more removal restarts than DOI variables ever created")
                log.info("%s: removed %d active DOI, restarting", inst.name, k)
                state.restart += 1
                continue
            if state.clock.expired():
                raise _Timeout
            psol, pduals = solve_rmp(model, plain=True)
            alpha = pduals.alpha
            if _plain_dual_optimal(model, duals.alpha, pduals.objective):
                alpha = duals.alpha
            cols = price_ng(inst, state.ng, alpha, cfg.max_cols)
            min_rc = cols[0][1] if cols else 0.0
            state.trace.rows.append(TraceRow(
                restart=state.restart,
                iteration=len(state.trace.rows),
                time_s=state.clock.elapsed(),
                rmp_obj=pduals.objective,
                lower_bound=lower_bound(pduals.objective, min_rc, inst.vehicle_bound),
                min_rc=min_rc,
                n_cols=len(model.columns),
                n_active_doi=0,
                phase="cert",
            ))
            new = [r for r, rc in cols if rc < -cfg.epsilon]
            if new and _add(state, new):
                log.info("%s: certification found %d columns", inst.name, len(new))
                state.restart += 1
                continue
            value, certified = pduals.objective, True
            break
    except _Timeout:
        timed_out = True
        value = state.trace.rows[-1].rmp_obj if state.trace.rows else math.nan
    return RunResult(
        value=value,
        model=model,
        trace=state.trace,
        certified=certified,
        restarts=state.restart,
        removed_doi=removed,
        unbounded_events=state.unbounded,
        elapsed=state.clock.elapsed(),
        timed_out=timed_out,
    )


def solve(inst: Instance, config: RunConfig | None = None, **overrides) -> RunResult:
    """Build neighborhoods and run the full loop in one call."""
    config = config or RunConfig(**overrides)
    n = inst.n_customers
    ng = build_neighborhoods(inst, min(config.ng_size, max(n - 1, 1)))
    return removal_loop(inst, ng, config)
