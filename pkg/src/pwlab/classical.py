"""Newtonian point dynamics ``m_a d^2X_a/dt^2 = -d_a V`` on the shared potentials."""
from __future__ import annotations

import numpy as np

from .core import ParticleModel
from .errors import NonFinite
from .guidance import Trajectory
from .integrators import rk4_batch
from .potentials import Potential


def integrate_newton_batch(v: Potential, model: ParticleModel, x0, v0, t_final: float, dt: float,
                           t0: float = 0.0) -> list[Trajectory]:
    d = model.dim
    x0 = np.asarray(x0, dtype=float).reshape(-1, d)
    v0 = np.asarray(v0, dtype=float).reshape(-1, d)
    if len(v0) == 1 and len(x0) > 1:
        v0 = np.repeat(v0, len(x0), axis=0)
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(v0)) and np.isfinite(t_final)):
        raise NonFinite("initial conditions must be finite")
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = int(round((t_final - t0) / dt))
    if n < 0 or abs(n * dt - (t_final - t0)) > 1e-9 * max(1.0, abs(t_final - t0)):
        raise ValueError(f"dt {dt} does not divide [{t0}, {t_final}]")
    masses = model.mass_array

    def rhs(y, t):
        acc = -v.gradient(y[:, :d], t) / masses
        return np.concatenate([y[:, d:], acc], axis=1), np.ones(len(y), dtype=bool)

    res = rk4_batch(rhs, np.concatenate([x0, v0], axis=1), t0, dt, n)
    if not np.all(np.isfinite(res.path)):
        raise NonFinite("classical trajectory became non-finite")
    return [Trajectory(res.times, res.path[:, j, :d], res.path[:, j, d:], "newton") for j in range(len(x0))]


def integrate_newton(v: Potential, model: ParticleModel, x0, v0, t_final: float, dt: float,
                     t0: float = 0.0) -> Trajectory:
    """RK4 trajectory with velocities; free motion is reproduced exactly."""
    return integrate_newton_batch(v, model, [np.atleast_1d(x0)], [np.atleast_1d(v0)], t_final, dt, t0)[0]


def mechanical_energy(traj: Trajectory, v: Potential, model: ParticleModel) -> np.ndarray:
    kinetic = 0.5 * np.sum(model.mass_array * traj.velocities**2, axis=1)
    return kinetic + np.array([v.at(p[None], t)[0] for p, t in zip(traj.points, traj.times)])
