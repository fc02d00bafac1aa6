"""Fixed-step RK4 over a batch of states, with per-state failure tracking."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# rhs(y, t) -> (dy/dt, ok); y has shape (n, d); ok is a boolean (n,) mask.
BatchRHS = Callable[[np.ndarray, float], tuple[np.ndarray, np.ndarray]]


@dataclass
class BatchResult:
    times: np.ndarray           # (n_steps + 1,)
    path: np.ndarray | None     # (n_steps + 1, n, d) when kept
    final: np.ndarray           # (n, d) last accepted state per member
    fail_step: np.ndarray       # (n,) step index of failure, -1 if none


def rk4_batch(rhs: BatchRHS, y0: np.ndarray, t0: float, dt: float, n_steps: int,
              keep_path: bool = True) -> BatchResult:
    """Classical RK4 on every row of ``y0``.

    A member whose right-hand side reports ``ok == False`` at any stage of
    step ``i`` is frozen at its step-``i`` state and ``fail_step`` records
    ``i``.  Healthy members are unaffected: each row is advanced with the
    same elementwise arithmetic whatever the batch composition.
    """
    y = np.array(y0, dtype=float, copy=True)
    n = len(y)
    times = t0 + dt * np.arange(n_steps + 1)
    fail_step = np.full(n, -1)
    alive = np.ones(n, dtype=bool)
    path = np.empty((n_steps + 1,) + y.shape) if keep_path else None
    if keep_path:
        path[0] = y
    with np.errstate(invalid="ignore"):
        for i in range(n_steps):
            idx = np.flatnonzero(alive)
            if idx.size:
                t = times[i]
                yi = y[idx]
                k1, ok1 = rhs(yi, t)
                k2, ok2 = rhs(yi + 0.5 * dt * k1, t + 0.5 * dt)
                k3, ok3 = rhs(yi + 0.5 * dt * k2, t + 0.5 * dt)
                k4, ok4 = rhs(yi + dt * k3, times[i + 1])
                ok = ok1 & ok2 & ok3 & ok4
                step = yi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                good = idx[ok]
                y[good] = step[ok]
                bad = idx[~ok]
                fail_step[bad] = i
                alive[bad] = False
            if keep_path:
                path[i + 1] = y
    return BatchResult(times, path, y, fail_step)
