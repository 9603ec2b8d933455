"""Primal active-set method for tiny least-norm problems.

Solves ``min 0.5 * ||x||^2  s.t.  G @ x <= h`` from a feasible start. The
rebate problems handed to it have a handful of variables, so dense
factorizations are fine.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import nnls

__all__ = ["min_norm_active_set", "kkt_residual"]


def _eqp(x: np.ndarray, A: np.ndarray):
    """Step ``p`` and multipliers for ``min 0.5||x + p||^2  s.t.  A p = 0``."""
    if A.shape[0] == 0:
        return -x, np.zeros(0)
    mu = np.linalg.lstsq(A @ A.T, -(A @ x), rcond=None)[0]
    return -x - A.T @ mu, mu


def min_norm_active_set(G, h, x0, max_iter: int = 500, tol: float = 1e-10):
    """Return ``(x, working_set, multipliers, converged)``."""
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    x = np.array(x0, dtype=float)
    if np.any(G @ x - h > 1e-7):
        raise ValueError("starting point is infeasible")
    work: list[int] = []
    scale = 1.0 + float(np.abs(h).max(initial=0.0))
    for _ in range(max_iter):
        p, mu = _eqp(x, G[work])
        if np.linalg.norm(p) <= tol * scale:
            if not work or mu.min() >= -tol * scale:
                return x, work, mu, True
            work.pop(int(np.argmin(mu)))
            continue
        step, blocking = 1.0, None
        gp = G @ p
        slack = h - G @ x
        for i in np.flatnonzero(gp > tol):
            if i in work:
                continue
            t = max(slack[i], 0.0) / gp[i]
            if t < step:
                step, blocking = t, int(i)
        x = x + step * p
        if blocking is not None:
            work.append(blocking)
    return x, work, np.zeros(len(work)), False


def kkt_residual(G, h, x, active_tol: float = 1e-7) -> tuple[float, float]:
    """``(primal infeasibility, stationarity residual)`` at ``x``.

    Stationarity uses the best nonnegative multipliers on the active rows,
    so a KKT point yields ``(0, 0)`` up to rounding.
    """
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    x = np.asarray(x, dtype=float)
    viol = float(np.maximum(G @ x - h, 0).max(initial=0.0))
    act = np.flatnonzero(np.abs(G @ x - h) <= active_tol * (1 + np.abs(h)))
    if len(act) == 0:
        return viol, float(np.linalg.norm(x))
    _, res = nnls(G[act].T, -x)
    return viol, float(res)
