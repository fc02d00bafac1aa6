"""Second-order (quantum potential) dynamics.

``m_a d^2X_a/dt^2 = -d_a (V + Q)`` with ``Q = sum_a -(1/2 m_a) d_a^2 R / R``
and ``R = |psi|``.  Spectral derivatives of R are used throughout, so the
force ``-d_a Q`` is assembled from R, R', R'' and R''' rather than by
differentiating the (masked) Q field.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import GridSpec, ParticleModel, WaveFunction, _frozen, node_mask, spectral_derivative
from .guidance import FieldHistory, IntegratorOptions, Trajectory, _as_starts, _schedule, trajectories_from_batch
from .integrators import rk4_batch
from .potentials import Potential
from .schrodinger import EvolutionRecord


@dataclass(frozen=True)
class QuantumPotentialField:
    grid: GridSpec
    values: np.ndarray
    valid: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        valid = np.asarray(self.valid, dtype=bool).reshape(self.grid.shape)
        vals = np.where(valid, np.asarray(self.values, dtype=float).reshape(self.grid.shape), np.nan)
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "valid", _frozen(valid))


def _amplitude(psi: WaveFunction, node_floor):
    r = np.abs(psi.amplitudes)
    valid = node_mask(r**2, node_floor)
    return r, valid, np.where(valid, r, 1.0)


def quantum_potential(psi: WaveFunction, model: ParticleModel, node_floor: float | None = None) -> QuantumPotentialField:
    grid = psi.grid
    model.check(grid)
    r, valid, safe = _amplitude(psi, node_floor)
    q = np.zeros(grid.shape)
    for a, m in enumerate(model.masses):
        q -= spectral_derivative(r, grid, a, 2) / (2 * m)
    return QuantumPotentialField(grid, q / safe, valid, psi.time)


def quantum_force(psi: WaveFunction, model: ParticleModel, node_floor: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``-grad Q`` on the grid, shape ``(dim, *shape)``, plus the validity mask.

    With ``L_b = d_b^2 R / R``:  ``d_a L_b = d_a d_b^2 R / R - L_b d_a R / R``.
    """
    grid = psi.grid
    r, valid, safe = _amplitude(psi, node_floor)
    d1 = [spectral_derivative(r, grid, a, 1) for a in range(grid.dim)]
    d2 = [spectral_derivative(r, grid, b, 2) for b in range(grid.dim)]
    force = np.zeros((grid.dim,) + grid.shape)
    for a in range(grid.dim):
        for b, m in enumerate(model.masses):
            d_a_d2b = spectral_derivative(d2[b], grid, a, 1)
            grad_lb = d_a_d2b / safe - d2[b] * d1[a] / safe**2
            force[a] += grad_lb / (2 * m)
    return np.where(valid, force, np.nan), valid


def acceleration_history(record: EvolutionRecord, v: Potential, model: ParticleModel, opts: IntegratorOptions) -> FieldHistory:
    """Per-snapshot ``-(grad V + grad Q) / m`` fields."""
    masses = model.mass_array.reshape((-1,) + (1,) * record.grid.dim)

    def make(psi):
        fq, valid = quantum_force(psi, model, opts.node_floor)
        fv = -v.gradient_grid(psi.grid, psi.time)
        return (fq + fv) / masses, valid
    return FieldHistory(record, make, opts.tolerance)


def integrate_second_order_batch(record: EvolutionRecord, v: Potential, model: ParticleModel, x0, v0,
                                 opts: IntegratorOptions = IntegratorOptions(),
                                 history: FieldHistory | None = None) -> list[Trajectory]:
    grid = record.grid
    model.check(grid)
    x0 = _as_starts(x0, grid.dim)
    v0 = _as_starts(v0, grid.dim)
    if len(v0) == 1 and len(x0) > 1:
        v0 = np.repeat(v0, len(x0), axis=0)
    if not np.all(np.isfinite(v0)):
        raise ValueError("initial velocities must be finite")
    if not np.all(grid.contains(x0)):
        raise ValueError("every start must lie inside the grid extent")
    history = history or acceleration_history(record, v, model, opts)
    d = grid.dim

    def rhs(y, t):
        acc, ok = history(y[:, :d], t)
        return np.concatenate([y[:, d:], acc], axis=1), ok

    t0, n, dt = _schedule(history, opts)
    res = rk4_batch(rhs, np.concatenate([x0, v0], axis=1), t0, dt, n)
    trajs = trajectories_from_batch(res, history, d, "second-order", False)
    if opts.store_velocities:
        trajs = [replace(tr, velocities=res.path[: len(tr.times), j, d:]) for j, tr in enumerate(trajs)]
    return trajs


def integrate_second_order(record: EvolutionRecord, v: Potential, model: ParticleModel, x0, v0,
                           opts: IntegratorOptions = IntegratorOptions(), history: FieldHistory | None = None) -> Trajectory:
    """RK4 on ``(X, U)`` with ``dU/dt = -grad(V + Q)/m``; raises on node proximity.

    Velocities are always kept on the returned trajectory.
    """
    traj = integrate_second_order_batch(record, v, model, [np.atleast_1d(x0)], [np.atleast_1d(v0)],
                                        replace(opts, store_velocities=True), history)[0]
    if traj.error is not None:
        raise traj.error
    return traj
