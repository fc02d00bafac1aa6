"""Split-step Fourier propagation of the Schrodinger equation (hbar = 1).

The kinetic operator ``sum_a -(1/2 m_a) d_a^2`` is applied exactly in
Fourier space; the potential is applied pointwise in two half steps
(Strang splitting).  Also home to the closed-form states used as oracles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import GridSpec, ParticleModel, WaveFunction
from .errors import NonFinite, PacketTruncated
from .potentials import Free, Harmonic, Potential

SCHEME = "strang-2"
TRUNCATION_TOL = 1e-6


@dataclass(frozen=True)
class EvolutionRecord:
    snapshots: tuple[WaveFunction, ...]
    dt: float
    scheme: str = SCHEME
    potential: dict | None = None
    model: ParticleModel | None = None

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        if not snaps:
            raise ValueError("record needs at least one snapshot")
        t = np.array([s.time for s in snaps])
        if np.any(np.diff(t) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        object.__setattr__(self, "snapshots", snaps)

    @property
    def grid(self) -> GridSpec:
        return self.snapshots[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def t_start(self) -> float:
        return self.snapshots[0].time

    @property
    def t_end(self) -> float:
        return self.snapshots[-1].time

    def __len__(self):
        return len(self.snapshots)

    def manifest(self) -> dict:
        return {
            "dt": self.dt,
            "scheme": self.scheme,
            "potential": self.potential,
            "model": None if self.model is None else self.model.to_dict(),
            "grid": self.grid.to_dict(),
            "times": self.times.tolist(),
        }


class SplitStepPropagator:
    """Caches the kinetic phase and static potential half-step factors."""

    def __init__(self, grid: GridSpec, potential: Potential, model: ParticleModel, dt: float):
        model.check(grid)
        self.grid, self.potential, self.model, self.dt = grid, potential, model, float(dt)
        ksq = sum(k**2 / m for k, m in zip(grid.k_mesh(), model.masses))
        self.kinetic = np.exp(-0.5j * self.dt * ksq)
        self._static_half = None
        if isinstance(potential, Free):
            self._static_half = 1.0
        elif not potential.time_dependent:
            self._static_half = np.exp(-0.5j * self.dt * potential.values(grid))

    def _half(self, t: float):
        if self._static_half is not None:
            return self._static_half
        return np.exp(-0.5j * self.dt * self.potential.values(self.grid, t))

    def advance(self, amps: np.ndarray, t: float) -> np.ndarray:
        """One Strang step from time ``t`` to ``t + dt`` on a raw array."""
        amps = amps * self._half(t)
        amps = np.fft.ifftn(np.fft.fftn(amps) * self.kinetic)
        return amps * self._half(t + self.dt)

    def step(self, psi: WaveFunction, n: int = 1) -> WaveFunction:
        amps = psi.amplitudes
        t0 = psi.time
        for i in range(n):
            amps = self.advance(amps, t0 + i * self.dt)
        if not np.all(np.isfinite(amps)):
            raise NonFinite(f"non-finite amplitude after stepping to t={t0 + n * self.dt}")
        return WaveFunction(self.grid, amps, t0 + n * self.dt)


def step_splitstep(psi: WaveFunction, v: Potential, model: ParticleModel, dt: float) -> WaveFunction:
    if not dt > 0:
        raise ValueError("dt must be positive")
    return SplitStepPropagator(psi.grid, v, model, dt).step(psi)


def evolve(psi0: WaveFunction, v: Potential, model: ParticleModel, t_final: float, dt: float = 1e-3,
           snapshot_stride: int = 10) -> EvolutionRecord:
    """Step ``psi0`` to ``t_final``, keeping every ``snapshot_stride``-th state and the last."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    span = t_final - psi0.time
    n_steps = int(round(span / dt))
    if n_steps < 0 or abs(n_steps * dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f"dt={dt} does not divide the span {span}")
    prop = SplitStepPropagator(psi0.grid, v, model, dt)
    snaps = [psi0]
    amps = psi0.amplitudes
    t0 = psi0.time
    for i in range(1, n_steps + 1):
        amps = prop.advance(amps, t0 + (i - 1) * dt)
        if i % snapshot_stride == 0 or i == n_steps:
            if not np.all(np.isfinite(amps)):
                raise NonFinite(f"non-finite amplitude at step {i}")
            snaps.append(WaveFunction(psi0.grid, amps, t0 + i * dt))
    return EvolutionRecord(tuple(snaps), dt, SCHEME, v.descriptor(), model)


def expected_energy(psi: WaveFunction, v: Potential, model: ParticleModel) -> float:
    """<H> with the spectral kinetic energy."""
    grid = psi.grid
    amps = psi.amplitudes
    ksq = sum(k**2 / m for k, m in zip(grid.k_mesh(), model.masses))
    phi = np.fft.fftn(amps)
    kinetic = 0.5 * np.sum(ksq * np.abs(phi) ** 2) / grid.size
    potential = np.sum(v.values(grid, psi.time) * np.abs(amps) ** 2)
    return float((kinetic + potential) * grid.cell_volume / psi.norm() ** 2)


# --------------------------------------------------------------------------
# closed-form states

def _vec(x, dim) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size == 1 and dim > 1:
        x = np.full(dim, float(x[0]))
    if x.size != dim:
        raise ValueError(f"expected {dim} components, got {x.size}")
    return x


def _check_contained(grid: GridSpec, center, sigma) -> None:
    """Gaussian density N(center, sigma^2) per axis must sit inside the box."""
    inside = 1.0
    for a in range(grid.dim):
        s = math.sqrt(2) * sigma[a]
        inside *= 0.5 * (math.erf((grid.hi[a] - center[a]) / s) - math.erf((grid.lo[a] - center[a]) / s))
    if 1 - inside > TRUNCATION_TOL:
        raise PacketTruncated(f"packet leaks {1 - inside:.2e} of its mass past the box")


def gaussian_packet(grid: GridSpec, center, momentum, sigma) -> WaveFunction:
    """Normalised ``exp(-|x-x0|^2/(4 sigma^2) + i p.x)``; density variance sigma^2 per axis."""
    center, momentum, sigma = (_vec(v, grid.dim) for v in (center, momentum, sigma))
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    _check_contained(grid, center, sigma)
    mesh = grid.mesh()
    expo = sum(-((x - c) ** 2) / (4 * s**2) + 1j * p * x for x, c, p, s in zip(mesh, center, momentum, sigma))
    return WaveFunction(grid, np.exp(expo), 0.0).normalized()


def free_gaussian_width(sigma0, m, t):
    return np.asarray(sigma0) * np.sqrt(1 + t**2 / (4 * np.asarray(m) ** 2 * np.asarray(sigma0) ** 4))


def analytic_free_gaussian(grid: GridSpec, center, momentum, sigma0, m, t: float) -> WaveFunction:
    """Exact free evolution of :func:`gaussian_packet` to time ``t`` (per-axis mass ``m``)."""
    center, momentum, sigma0, m = (_vec(v, grid.dim) for v in (center, momentum, sigma0, m))
    _check_contained(grid, center + momentum / m * t, free_gaussian_width(sigma0, m, t))
    mesh = grid.mesh()
    amps = np.ones(grid.shape, dtype=complex)
    for x, c, p, s, mm in zip(mesh, center, momentum, sigma0, m):
        spread = 1 + 1j * t / (2 * mm * s**2)
        y = x - c - p / mm * t
        amps = amps * spread**-0.5 * np.exp(-(y**2) / (4 * s**2 * spread) + 1j * p * x - 0.5j * p**2 * t / mm)
    psi = WaveFunction(grid, amps, t)
    return WaveFunction(grid, amps / psi.norm(), t)


def free_gaussian_velocity(x, center, momentum, sigma0, m, t):
    """Closed-form guidance velocity of the free Gaussian, per axis."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    s4 = np.asarray(sigma0, dtype=float) ** 4
    y = x - np.asarray(center) - np.asarray(momentum) / m * t
    return np.asarray(momentum) / m + y * t / (4 * m**2 * s4 + t**2)


def harmonic_ground_state(grid: GridSpec, potential: Harmonic, model: ParticleModel) -> WaveFunction:
    """Real ground state ``prod_a (m w/pi)^(1/4) exp(-m w x^2/2)``, renormalised on the grid."""
    omega = potential.frequencies(model.masses)
    sigma = 1 / np.sqrt(2 * np.array(model.masses) * omega)
    _check_contained(grid, np.zeros(grid.dim), sigma)
    amps = np.ones(grid.shape)
    for x, m, w in zip(grid.mesh(), model.masses, omega):
        amps = amps * np.exp(-m * w * x**2 / 2)
    return WaveFunction(grid, amps.astype(complex), 0.0).normalized()


def harmonic_ground_energy(potential: Harmonic, model: ParticleModel) -> float:
    return float(0.5 * np.sum(potential.frequencies(model.masses)))


def harmonic_coherent_state(grid: GridSpec, potential: Harmonic, model: ParticleModel, x0, p0, t: float) -> WaveFunction:
    """Displaced ground state evolved in a harmonic well, up to a global phase."""
    omega = potential.frequencies(model.masses)
    x0, p0 = _vec(x0, grid.dim), _vec(p0, grid.dim)
    m = np.array(model.masses)
    xc = x0 * np.cos(omega * t) + p0 / (m * omega) * np.sin(omega * t)
    pc = p0 * np.cos(omega * t) - m * omega * x0 * np.sin(omega * t)
    _check_contained(grid, xc, 1 / np.sqrt(2 * m * omega))
    expo = sum(-mm * w * (x - c) ** 2 / 2 + 1j * p * x for x, mm, w, c, p in zip(grid.mesh(), m, omega, xc, pc))
    return WaveFunction(grid, np.exp(expo), t).normalized()


def plane_wave(grid: GridSpec, mode: Sequence[int]) -> WaveFunction:
    """Normalised grid eigenmode ``exp(i k.x)`` with ``k_a = 2 pi n_a / L_a``."""
    mode = np.atleast_1d(np.asarray(mode, dtype=int))
    k = plane_wave_momentum(grid, mode)
    expo = sum(1j * kk * x for kk, x in zip(k, grid.mesh()))
    return WaveFunction(grid, np.exp(expo), 0.0).normalized()


def plane_wave_momentum(grid: GridSpec, mode) -> np.ndarray:
    return 2 * np.pi * np.atleast_1d(np.asarray(mode, dtype=float)) / grid.lengths
