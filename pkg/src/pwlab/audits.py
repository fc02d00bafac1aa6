"""Cross-module audits that compare two routes to the same prediction."""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .bohm import integrate_second_order_batch
from .classical import integrate_newton_batch
from .core import ParticleModel, WaveFunction
from .equivariance import continuity_residual
from .frames import accelerated_frame_potential, euclidean_transform_wavefunction, fictitious_acceleration
from .guidance import IntegratorOptions, guidance_history, integrate_ensemble
from .potentials import Potential
from .schrodinger import EvolutionRecord, evolve


def equivalence_audit(record: EvolutionRecord, potential: Potential, model: ParticleModel, starts,
                      opts: IntegratorOptions = IntegratorOptions(), v0_offset=None) -> dict:
    """First-order paths vs second-order paths started on the guidance velocity.

    With ``v0_offset`` a second batch starts at guidance velocity plus the
    offset, showing that the restriction on initial velocities matters.
    Also reports how far the second-order velocity drifts from the local
    guidance velocity along each path.
    """
    grid = record.grid
    starts = np.asarray(starts, dtype=float).reshape(-1, grid.dim)
    history = guidance_history(record, model, opts)
    first = integrate_ensemble(record, model, starts, opts, history)
    v_init, ok = history(starts, record.t_start)
    if not ok.all():
        raise ValueError("some starts sit on node regions at the initial time")
    second = integrate_second_order_batch(record, potential, model, starts, v_init,
                                          replace(opts, store_velocities=True))
    gaps, drift = [], []
    for a, b in zip(first, second):
        n = min(len(a.times), len(b.times))
        gaps.append(float(np.abs(a.points[:n] - b.points[:n]).max()))
        guide = np.stack([history(b.points[i : i + 1], t)[0][0] for i, t in enumerate(b.times)])
        drift.append(float(np.nanmax(np.abs(guide - b.velocities))))
    report = {
        "audit": "first-second-order-equivalence",
        "inputs": {"starts": starts.tolist(), "options": opts.to_dict(), "masses": list(model.masses),
                   "potential": potential.descriptor(), "t_start": record.t_start, "t_end": record.t_end},
        "initial_velocities": v_init.tolist(),
        "per_start_gap": gaps,
        "max_gap": max(gaps) if gaps else 0.0,
        "max_velocity_constraint_drift": max(drift) if drift else 0.0,
        "errors": [str(t.error) for t in first + second if t.error is not None],
    }
    if v0_offset is not None:
        off = np.atleast_1d(np.asarray(v0_offset, dtype=float))
        mism = integrate_second_order_batch(record, potential, model, starts, v_init + off, opts)
        mgaps = []
        for a, b in zip(first, mism):
            n = min(len(a.times), len(b.times))
            mgaps.append(float(np.abs(a.points[:n] - b.points[:n]).max()))
        report["v0_offset"] = off.tolist()
        report["mismatched_per_start_gap"] = mgaps
        report["mismatched_min_gap"] = min(mgaps) if mgaps else 0.0
    return report


def euclidean_covariance_audit(psi0: WaveFunction, potential: Potential, model: ParticleModel, R, a,
                               t_final: float, dt: float = 1e-3) -> tuple:
    """Evolve-then-transform vs transform-then-evolve for an invariant potential.

    Returns ``(report, route_a, route_b)``; the routes are the two final states.
    """
    grid = psi0.grid
    R = np.atleast_2d(np.asarray(R, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if len(set(model.masses)) != 1:
        raise ValueError("Euclidean audit needs equal masses on the transformed axes")
    nodes = grid.nodes()
    rho = np.abs(psi0.amplitudes).ravel() ** 2
    support = rho > 1e-12 * rho.max()
    moved = nodes[support] @ R.T + a
    v_here = potential.at(nodes[support])
    v_there = potential.at(moved)
    mismatch = float(np.abs(v_there - v_here).max())
    if not potential.distance_only or mismatch > 1e-9 * (1 + np.abs(v_here).max()):
        raise ValueError(f"potential is not invariant under the transform (mismatch {mismatch:.3e})")
    stride = max(1, int(round((t_final - psi0.time) / dt)))
    evolved = evolve(psi0, potential, model, t_final, dt, stride).snapshots[-1]
    route_a = euclidean_transform_wavefunction(evolved, R, a)
    moved0 = euclidean_transform_wavefunction(psi0, R, a)
    route_b = evolve(moved0, potential, model, t_final, dt, stride).snapshots[-1]
    diff = np.abs(route_a.amplitudes - route_b.amplitudes)
    return {
        "audit": "euclidean-covariance",
        "inputs": {"grid": grid.to_dict(), "rotation": R.tolist(), "translation": a.tolist(),
                   "potential": potential.descriptor(), "masses": list(model.masses), "t_final": t_final, "dt": dt},
        "potential_mismatch_on_support": mismatch,
        "max_pointwise_diff": float(diff.max()),
        "norm_a": route_a.norm(),
        "norm_b": route_b.norm(),
    }, route_a, route_b


def accelerated_frame_audit(potential: Potential, model: ParticleModel, a, x0s, v0s, t_final: float, dt: float,
                            alt_masses=None) -> tuple:
    """Classical paths in the accelerated frame vs unprimed paths mapped by ``x - a t^2/2``.

    Returns ``(report, unprimed, primed)`` trajectory lists alongside the report.
    """
    if potential.kind not in ("free", "uniform_gradient"):
        # the mapped comparison needs grad V(x + a t^2/2) == grad V(x)
        raise ValueError(f"accelerated-frame mapping needs a potential with uniform gradient, got {potential.kind!r}")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    x0s = np.asarray(x0s, dtype=float).reshape(-1, model.dim)
    v0s = np.asarray(v0s, dtype=float).reshape(-1, model.dim)
    unprimed = integrate_newton_batch(potential, model, x0s, v0s, t_final, dt)
    vp = accelerated_frame_potential(potential, model, a)
    primed = integrate_newton_batch(vp, model, x0s, v0s, t_final, dt)
    gaps = []
    for u, p in zip(unprimed, primed):
        mapped = u.points - 0.5 * np.outer(u.times**2, a)
        gaps.append(float(np.abs(mapped - p.points).max()))
    probe = np.vstack([x0s, x0s + 1.0])
    uni = [fictitious_acceleration(potential, model, a, probe)]
    if alt_masses is not None:
        uni.append(fictitious_acceleration(potential, ParticleModel(tuple(alt_masses)), a, probe))
    universality = max(float(np.abs(u + a).max()) for u in uni)
    return {
        "audit": "accelerated-frame",
        "inputs": {"a": a.tolist(), "masses": list(model.masses), "alt_masses": None if alt_masses is None else list(alt_masses),
                   "potential": potential.descriptor(), "x0": x0s.tolist(), "v0": v0s.tolist(), "t_final": t_final, "dt": dt},
        "primed_potential": vp.descriptor(),
        "per_start_gap": gaps,
        "max_gap": max(gaps),
        "fictitious_acceleration_deviation": universality,
    }, unprimed, primed


def continuity_refinement(psi0: WaveFunction, potential: Potential, model: ParticleModel, t_eval: float,
                          t_final: float, dts, snapshot_stride: int = 10, node_floor=None) -> dict:
    """Continuity residual at ``t_eval`` for a sequence of step sizes, with observed orders."""
    rows = []
    for dt in dts:
        rec = evolve(psi0, potential, model, t_final, dt, snapshot_stride)
        k = int(np.argmin(np.abs(rec.times - t_eval)))
        rows.append({"dt": dt, "t": float(rec.times[k]), "residual": continuity_residual(rec, model, k, node_floor)})
    orders = [math.log(rows[i]["residual"] / rows[i + 1]["residual"]) / math.log(dts[i] / dts[i + 1])
              for i in range(len(rows) - 1)]
    return {"audit": "continuity", "levels": rows, "observed_orders": orders}
