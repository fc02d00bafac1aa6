"""First-order (de Broglie) trajectories through a stored wavefunction history.

``dX_a/dt = Im(psi* d_a psi) / (m_a |psi|^2)`` evaluated by multilinear
interpolation of precomputed grid fields, linearly blended in time between
the two bracketing snapshots, integrated by fixed-step RK4.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .core import GridSpec, ParticleModel, WaveFunction, interpolate_many, phase_gradient
from .errors import NodeProximity, OutOfSpan, PilotWaveError
from .integrators import rk4_batch
from .schrodinger import EvolutionRecord


@dataclass(frozen=True)
class IntegratorOptions:
    """Settings for trajectory integration.

    ``node_floor`` is absolute; ``None`` means ``1e-12 * max|psi|^2`` per
    snapshot.  ``tolerance`` is the slack allowed when matching requested
    times against the record span.  ``t_final=None`` runs to the record end.
    """

    dt: float = 1e-3
    node_floor: float | None = None
    tolerance: float = 1e-9
    t_final: float | None = None
    store_velocities: bool = False
    workers: int = 1

    def to_dict(self) -> dict:
        return {"dt": self.dt, "node_floor": self.node_floor, "tolerance": self.tolerance,
                "t_final": self.t_final, "store_velocities": self.store_velocities}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled path; ``error`` is set (and the path truncated) if it stopped early."""

    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray | None = None
    scheme: str = "guidance"
    error: PilotWaveError | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if len(t) != len(pts):
            raise ValueError("times and points differ in length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", pts)

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


class FieldHistory:
    """Per-snapshot vector fields from a record, blended linearly in time."""

    def __init__(self, record: EvolutionRecord, make_field: Callable[[WaveFunction], tuple[np.ndarray, np.ndarray]],
                 tolerance: float = 1e-9):
        self.record = record
        self.grid: GridSpec = record.grid
        self.times = record.times
        self.tolerance = tolerance
        fields = [make_field(s) for s in record.snapshots]
        self.values = np.stack([f[0] for f in fields])
        self.valid = np.stack([f[1] for f in fields])

    def check_span(self, t0: float, t1: float) -> None:
        lo, hi = self.times[0] - self.tolerance, self.times[-1] + self.tolerance
        if not (lo <= t0 <= hi and lo <= t1 <= hi):
            raise OutOfSpan(f"interval [{t0}, {t1}] outside record span [{self.times[0]}, {self.times[-1]}]")

    def bracket(self, t: float) -> tuple[int, float]:
        if t < self.times[0] - self.tolerance or t > self.times[-1] + self.tolerance:
            raise OutOfSpan(f"time {t} outside record span [{self.times[0]}, {self.times[-1]}]")
        if len(self.times) == 1:
            return 0, 0.0
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.times) - 2)
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return k, float(min(max(w, 0.0), 1.0))

    def __call__(self, points: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        k, w = self.bracket(t)
        a, ok = interpolate_many(self.values[k], self.valid[k], self.grid, points)
        if w == 0.0:
            return a, ok
        b, ok_b = interpolate_many(self.values[k + 1], self.valid[k + 1], self.grid, points)
        if w == 1.0:
            return b, ok_b
        return (1 - w) * a + w * b, ok & ok_b


def guidance_history(record: EvolutionRecord, model: ParticleModel, opts: IntegratorOptions) -> FieldHistory:
    def make(psi):
        f = phase_gradient(psi, model, opts.node_floor)
        return f.components, f.valid
    return FieldHistory(record, make, opts.tolerance)


def _schedule(history: FieldHistory, opts: IntegratorOptions, t0: float | None = None) -> tuple[float, int, float]:
    t0 = history.times[0] if t0 is None else t0
    t1 = history.times[-1] if opts.t_final is None else opts.t_final
    history.check_span(t0, t1)
    if not opts.dt > 0:
        raise ValueError("dt must be positive")
    spacing = np.diff(history.times)
    if spacing.size and opts.dt > spacing.min() * (1 + 1e-9):
        raise ValueError(f"integration dt {opts.dt} exceeds snapshot spacing {spacing.min()}")
    n = int(round((t1 - t0) / opts.dt))
    if n < 0 or abs(n * opts.dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise ValueError(f"dt {opts.dt} does not divide the interval [{t0}, {t1}]")
    return t0, n, opts.dt


def trajectories_from_batch(res, history: FieldHistory, dim: int, scheme: str, store_velocities: bool,
                            velocity_of=None) -> list[Trajectory]:
    """Split a batch RK4 result into per-member trajectories."""
    out = []
    for j in range(res.final.shape[0]):
        stop = res.fail_step[j]
        last = len(res.times) - 1 if stop < 0 else stop
        times = res.times[: last + 1]
        states = res.path[: last + 1, j, :]
        pts = states[:, :dim]
        vel = None
        if store_velocities:
            vel = velocity_of(states, times) if velocity_of else None
        err = None
        if stop >= 0:
            where = pts[-1]
            err = NodeProximity(f"trajectory {j} reached a node region near t={times[-1]:.6g}, "
                                f"x={np.round(where, 6).tolist()}", time=float(times[-1]), location=where.tolist())
        out.append(Trajectory(times, pts, vel, scheme, err))
    return out


def _guidance_velocity_along(history: FieldHistory):
    def velocity_of(states, times):
        return np.stack([history(states[i : i + 1], t)[0][0] for i, t in enumerate(times)])
    return velocity_of


def _run_guidance(history: FieldHistory, starts: np.ndarray, opts: IntegratorOptions, keep_path: bool = True):
    t0, n, dt = _schedule(history, opts)
    return rk4_batch(history, starts, t0, dt, n, keep_path=keep_path)


def _chunks(n: int, workers: int) -> list[slice]:
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [slice(bounds[i], bounds[i + 1]) for i in range(workers)]


def _as_starts(starts, dim: int) -> np.ndarray:
    arr = np.asarray(starts, dtype=float)
    if arr.size == 0:
        return np.empty((0, dim))
    return arr.reshape(-1, dim)


def integrate_ensemble(record: EvolutionRecord, model: ParticleModel, starts: Sequence, opts: IntegratorOptions = IntegratorOptions(),
                       history: FieldHistory | None = None) -> list[Trajectory]:
    """One guidance trajectory per start, in input order.

    Failures (node proximity) are attached to their own trajectory and do
    not abort the batch.
    """
    grid = record.grid
    model.check(grid)
    pts = _as_starts(starts, grid.dim)
    if len(pts) == 0:
        return []
    if not np.all(grid.contains(pts)):
        raise ValueError("every start must lie inside the grid extent")
    history = history or guidance_history(record, model, opts)
    velocity_of = _guidance_velocity_along(history)
    if opts.workers > 1 and len(pts) > 1:
        with ThreadPoolExecutor(opts.workers) as pool:
            parts = list(pool.map(lambda s: _run_guidance(history, pts[s], opts), _chunks(len(pts), opts.workers)))
        out = []
        for res in parts:
            out += trajectories_from_batch(res, history, grid.dim, "guidance", opts.store_velocities, velocity_of)
        return out
    res = _run_guidance(history, pts, opts)
    return trajectories_from_batch(res, history, grid.dim, "guidance", opts.store_velocities, velocity_of)


def integrate_guidance(record: EvolutionRecord, model: ParticleModel, x0, opts: IntegratorOptions = IntegratorOptions(),
                       history: FieldHistory | None = None) -> Trajectory:
    """Single guidance trajectory; raises :class:`NodeProximity` if it hits a node region."""
    traj = integrate_ensemble(record, model, [np.atleast_1d(x0)], replace(opts, workers=1), history)[0]
    if traj.error is not None:
        raise traj.error
    return traj


def transport_endpoints(history: FieldHistory, starts: np.ndarray, opts: IntegratorOptions) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints only (no path storage); returns ``(final_points, ok)``."""
    pts = _as_starts(starts, history.grid.dim)
    if opts.workers > 1 and len(pts) > 1:
        with ThreadPoolExecutor(opts.workers) as pool:
            parts = list(pool.map(lambda s: _run_guidance(history, pts[s], opts, keep_path=False),
                                  _chunks(len(pts), opts.workers)))
        final = np.concatenate([p.final for p in parts])
        fail = np.concatenate([p.fail_step for p in parts])
    else:
        res = _run_guidance(history, pts, opts, keep_path=False)
        final, fail = res.final, res.fail_step
    return final, fail < 0
