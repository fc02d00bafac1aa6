"""Continuity identity, ensemble transport and the guidance-mass experiment."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import DensityField, ParticleModel, WaveFunction, density, node_mask, sample_density, spectral_derivative
from .errors import DegenerateEnsemble, OutOfSpan
from .guidance import IntegratorOptions, guidance_history, transport_endpoints
from .schrodinger import EvolutionRecord

MAX_DROPPED_WEIGHT = 0.01


@dataclass(frozen=True, eq=False)
class EnsembleState:
    points: np.ndarray
    weights: np.ndarray | None = None
    time: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if len(pts) == 0:
            raise ValueError("ensemble must be nonempty")
        object.__setattr__(self, "points", pts)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (len(pts),) or np.any(w < 0):
                raise ValueError("weights must be nonnegative, one per point")
            if abs(math.fsum(w) - 1) > 1e-10:
                raise ValueError("weights must sum to 1")
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.points)

    def weight_array(self) -> np.ndarray:
        if self.weights is None:
            return np.full(len(self), 1.0 / len(self))
        return self.weights


@dataclass(frozen=True, eq=False)
class TransportResult:
    """Survivors keep their original weights; lost points are listed, not renormalised away."""

    points: np.ndarray
    weights: np.ndarray
    kept: np.ndarray
    dropped: np.ndarray
    dropped_weight: float
    time: float

    @property
    def state(self) -> EnsembleState:
        w = self.weights / math.fsum(self.weights)
        return EnsembleState(self.points, w, self.time)


def continuity_residual(record: EvolutionRecord, model: ParticleModel, t_index: int,
                        node_floor: float | None = None, return_field: bool = False):
    """L2 norm over valid nodes of ``d rho/dt + sum_a d_a (rho grad_a S / m_a)``.

    The time derivative is the three-point centred difference over the
    neighbouring snapshots (second order for uneven spacing too); the
    current ``Im(psi* d_a psi)/m_a`` and its divergence are spectral.
    """
    n = len(record)
    if not 0 < t_index < n - 1:
        raise OutOfSpan(f"t_index {t_index} needs neighbours in a record of {n} snapshots")
    grid = record.grid
    model.check(grid)
    t = record.times
    h1, h2 = t[t_index] - t[t_index - 1], t[t_index + 1] - t[t_index]
    rho_m, rho_0, rho_p = (np.abs(record.snapshots[i].amplitudes) ** 2 for i in (t_index - 1, t_index, t_index + 1))
    drho = (h1**2 * (rho_p - rho_0) + h2**2 * (rho_0 - rho_m)) / (h1 * h2 * (h1 + h2))
    psi = record.snapshots[t_index].amplitudes
    div = np.zeros(grid.shape)
    for a, m in enumerate(model.masses):
        current = np.imag(np.conj(psi) * spectral_derivative(psi, grid, a)) / m
        div += spectral_derivative(current, grid, a)
    resid = drho + div
    valid = node_mask(rho_0, node_floor)
    value = float(np.sqrt(np.sum(resid[valid] ** 2) * grid.cell_volume))
    if return_field:
        return value, np.where(valid, resid, np.nan)
    return value


# --------------------------------------------------------------------------
# Kolmogorov-Smirnov distances

def marginal_cdf(dens: DensityField, axis: int):
    """Piecewise-linear CDF of a gridded marginal, cells centred on nodes.

    Returns ``(edges, cdf_at_edges)`` on ``[lo - h/2, hi - h/2]``.
    """
    grid = dens.grid
    h = grid.spacing[axis]
    marg = dens.marginal(axis)
    edges = grid.lo[axis] - h / 2 + h * np.arange(grid.points[axis] + 1)
    cdf = np.concatenate([[0.0], np.cumsum(marg)])
    return edges, cdf / cdf[-1]


def ks_statistic(samples: np.ndarray, cdf, weights: np.ndarray | None = None) -> float:
    """Two-sided KS distance between a (weighted) sample and a CDF callable."""
    x = np.asarray(samples, dtype=float)
    order = np.argsort(x, kind="stable")
    x = x[order]
    w = np.full(len(x), 1.0 / len(x)) if weights is None else np.asarray(weights, dtype=float)[order] / np.sum(weights)
    upper = np.cumsum(w)
    lower = upper - w
    f = cdf(x)
    return float(max(np.max(upper - f), np.max(f - lower)))


def ks_distance(points: np.ndarray, dens: DensityField, weights: np.ndarray | None = None) -> np.ndarray:
    """Per-axis KS distance between ensemble points and a gridded density."""
    grid = dens.grid
    pts = np.asarray(points, dtype=float).reshape(-1, grid.dim)
    out = np.empty(grid.dim)
    for a in range(grid.dim):
        edges, cdf = marginal_cdf(dens, a)
        x = edges[0] + np.mod(pts[:, a] - edges[0], grid.lengths[a])
        out[a] = ks_statistic(x, lambda s: np.interp(s, edges, cdf), weights)
    return out


# --------------------------------------------------------------------------
# transport

def transport_ensemble(record: EvolutionRecord, model: ParticleModel, ens0: EnsembleState,
                       opts: IntegratorOptions = IntegratorOptions(), history=None) -> TransportResult:
    """Push every member along its guidance path to the end of ``opts``' interval."""
    grid = record.grid
    if not np.all(grid.contains(ens0.points)):
        raise ValueError("every ensemble point must lie inside the grid extent")
    history = history or guidance_history(record, model, opts)
    final, ok = transport_endpoints(history, ens0.points, opts)
    w = ens0.weight_array()
    kept = np.flatnonzero(ok)
    dropped = np.flatnonzero(~ok)
    dropped_weight = math.fsum(w[dropped])
    t_end = record.t_end if opts.t_final is None else opts.t_final
    if dropped_weight > MAX_DROPPED_WEIGHT:
        raise DegenerateEnsemble(f"{dropped_weight:.3%} of the ensemble weight hit node regions",
                                 dropped_weight=dropped_weight)
    return TransportResult(final[kept], w[kept], kept, dropped, dropped_weight, t_end)


def equilibrium_ensemble(psi: WaveFunction, n: int, seed: int) -> EnsembleState:
    return EnsembleState(sample_density(density(psi), n, seed), None, psi.time)


def coefficient_uniqueness_experiment(record: EvolutionRecord, model_true: ParticleModel, mass_scale: float,
                                      n: int, seed: int, opts: IntegratorOptions = IntegratorOptions()) -> dict:
    """Transport one equilibrium sample with the true masses and with ``mass_scale`` times them.

    The wavefunction always evolves with ``model_true``; only the guidance
    coefficients change.  Reports the per-axis KS distance of both endpoint
    sets against the final |psi|^2 and the wrong/control ratio.
    """
    if not mass_scale > 0 or mass_scale == 1:
        raise ValueError("mass_scale must be positive and different from 1")
    ens0 = equilibrium_ensemble(record.snapshots[0], n, seed)
    target = density(record.snapshots[-1])
    control = transport_ensemble(record, model_true, ens0, opts)
    wrong = transport_ensemble(record, model_true.scaled(mass_scale), ens0, opts)
    ks_control = ks_distance(control.points, target, control.weights)
    ks_wrong = ks_distance(wrong.points, target, wrong.weights)
    ratio = float(ks_wrong.max() / ks_control.max()) if ks_control.max() > 0 else math.inf
    return {
        "experiment": "coefficient-uniqueness",
        "inputs": {"mass_scale": mass_scale, "n": n, "seed": seed, "masses": list(model_true.masses),
                   "t_start": record.t_start, "t_end": record.t_end, "options": opts.to_dict()},
        "ks_control": ks_control.tolist(),
        "ks_wrong": ks_wrong.tolist(),
        "ks_control_max": float(ks_control.max()),
        "ks_wrong_max": float(ks_wrong.max()),
        "ratio": ratio,
        "dropped_weight_control": control.dropped_weight,
        "dropped_weight_wrong": wrong.dropped_weight,
    }
