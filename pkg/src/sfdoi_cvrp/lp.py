"""Linear programming behind a small solver contract.

``solve_lp`` minimizes ``c @ x`` subject to row constraints with senses
``>=``, ``<=`` or ``=`` and ``x >= 0``. Row duals follow the convention that
``c - A.T @ y >= 0`` at optimality, so ``>=`` rows have ``y >= 0`` and ``<=``
rows have ``y <= 0``. The backend is HiGHS' dual simplex through scipy, which
returns basic solutions and is deterministic for identical input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

__all__ = ["LpResult", "solve_lp", "find_ray", "OPTIMAL", "UNBOUNDED", "INFEASIBLE"]

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

TOL = 1e-7
_OPTIONS = {"primal_feasibility_tolerance": TOL, "dual_feasibility_tolerance": TOL}


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = float("nan")
    ray: np.ndarray | None = None
    message: str = ""

    @property
    def ray_support(self) -> list[int]:
        if self.ray is None:
            return []
        return [int(i) for i in np.flatnonzero(self.ray > 1e-9)]


@dataclass
class _Split:
    a_ub: sp.csr_matrix | None
    b_ub: np.ndarray | None
    a_eq: sp.csr_matrix | None
    b_eq: np.ndarray | None
    ub_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    ub_sign: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eq_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, int))


def _split(a, senses: Sequence[str], b) -> _Split:
    a = sp.csr_matrix(a)
    senses = np.asarray(senses)
    b = np.asarray(b, dtype=float)
    ge = senses == ">="
    le = senses == "<="
    eq = senses == "="
    if not np.all(ge | le | eq):
        raise ValueError(f"unknown row sense in {set(senses.tolist())}")
    ub_rows = np.flatnonzero(ge | le)
    sign = np.where(ge[ub_rows], -1.0, 1.0)
    eq_rows = np.flatnonzero(eq)
    a_ub = sp.diags(sign) @ a[ub_rows] if len(ub_rows) else None
    a_eq = a[eq_rows] if len(eq_rows) else None
    return _Split(
        a_ub, sign * b[ub_rows] if len(ub_rows) else None,
        a_eq, b[eq_rows] if len(eq_rows) else None,
        ub_rows, sign, eq_rows,
    )


def solve_lp(c, a, senses: Sequence[str], b, upper: float | None = None) -> LpResult:
    c = np.asarray(c, dtype=float)
    parts = _split(a, senses, b)
    res = linprog(
        c, A_ub=parts.a_ub, b_ub=parts.b_ub, A_eq=parts.a_eq, b_eq=parts.b_eq,
        bounds=(0, upper), method="highs-ds", options=_OPTIONS,
    )
    if res.status == 0:
        m = len(senses)
        y = np.zeros(m)
        if len(parts.ub_rows):
            # marginals are d(obj)/d(b_ub); undo the sign flip of >= rows
            y[parts.ub_rows] = parts.ub_sign * res.ineqlin.marginals
        if len(parts.eq_rows):
            y[parts.eq_rows] = res.eqlin.marginals
        return LpResult(OPTIMAL, res.x, y, float(res.fun), message=res.message)
    if res.status in (2, 3):
        ray = find_ray(c, a, senses)
        if ray is not None:
            return LpResult(UNBOUNDED, ray=ray, message=res.message)
        return LpResult(INFEASIBLE, message=res.message)
    raise RuntimeError(f"LP solver failed: {res.message}")


def find_ray(c, a, senses: Sequence[str]) -> np.ndarray | None:
    """An improving recession direction ``r`` (``c @ r < 0``) within the unit box, if any."""
    c = np.asarray(c, dtype=float)
    parts = _split(a, senses, np.zeros(len(senses)))
    res = linprog(
        c, A_ub=parts.a_ub, b_ub=parts.b_ub, A_eq=parts.a_eq, b_eq=parts.b_eq,
        bounds=(0, 1), method="highs-ds", options=_OPTIONS,
    )
    if res.status == 0 and res.fun < -TOL:
        return res.x
    return None
