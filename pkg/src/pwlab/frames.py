"""Frame transformations of states, potentials and trajectories.

* Galilean boost ``x' = x - v t`` with the compensating wavefunction phase
  ``exp[i(1/2 sum m v^2 t - sum m v.x)]``; consequence ``grad' S' = grad S - m v``.
* Time-independent Euclidean motions ``x' = R x + a`` acting on psi as a scalar.
* Uniform acceleration ``x' = x - a t^2/2`` acting on classical potentials:
  ``V' = V + sum m a.x`` (the gradient-free ``-1/2 sum m a^2 t^2`` is dropped).

Resampling on the periodic grid is spectral: translations are Fourier
shifts and rotations are products of three Fourier shears per plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import GridSpec, ParticleModel, WaveFunction, phase_gradient
from .errors import SupportWrap
from .guidance import IntegratorOptions, integrate_ensemble
from .potentials import Free, Potential, Sum, UniformGradient
from .schrodinger import evolve

EDGE_TOL = 1e-6      # relative edge amplitude above which a state counts as box-filling
WRAP_TOL = 1e-6      # probability allowed to be carried across the box boundary


@dataclass(frozen=True)
class FrameTransform:
    """Tagged frame change: ``boost``, ``euclidean`` or ``uniform_acceleration``."""

    kind: str
    v: tuple[float, ...] | None = None
    rotation: tuple[tuple[float, ...], ...] | None = None
    translation: tuple[float, ...] | None = None
    a: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == "boost":
            if self.v is None:
                raise ValueError("boost needs a velocity")
        elif self.kind == "euclidean":
            R = np.asarray(self.rotation, dtype=float)
            check_rotation(R)
            if self.translation is None or len(self.translation) != len(R):
                raise ValueError("translation must match the rotation dimension")
        elif self.kind == "uniform_acceleration":
            if self.a is None:
                raise ValueError("uniform_acceleration needs an acceleration")
        else:
            raise ValueError(f"unknown frame kind {self.kind!r}")

    @classmethod
    def boost(cls, v):
        return cls("boost", v=tuple(np.atleast_1d(v).astype(float)))

    @classmethod
    def euclidean(cls, R, a):
        R = np.atleast_2d(np.asarray(R, dtype=float))
        return cls("euclidean", rotation=tuple(map(tuple, R)), translation=tuple(np.atleast_1d(a).astype(float)))

    @classmethod
    def uniform_acceleration(cls, a):
        return cls("uniform_acceleration", a=tuple(np.atleast_1d(a).astype(float)))

    @property
    def applies_to_wavefunctions(self) -> bool:
        return self.kind in ("boost", "euclidean")

    def map_point(self, x, t: float = 0.0) -> np.ndarray:
        """Primed coordinates of an unprimed point at time ``t``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "boost":
            return x - np.array(self.v) * t
        if self.kind == "euclidean":
            return x @ np.array(self.rotation).T + np.array(self.translation)
        return x - 0.5 * np.array(self.a) * t**2


def check_rotation(R: np.ndarray, tol: float = 1e-12) -> None:
    R = np.atleast_2d(R)
    if R.shape[0] != R.shape[1]:
        raise ValueError("rotation must be square")
    if np.abs(R @ R.T - np.eye(len(R))).max() > tol or abs(np.linalg.det(R) - 1) > tol:
        raise ValueError("rotation must be orthogonal with determinant 1")


def rotation_2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def plane_rotation(dim: int, p: int, q: int, theta: float) -> np.ndarray:
    P = np.eye(dim)
    c, s = math.cos(theta), math.sin(theta)
    P[p, p], P[p, q], P[q, p], P[q, q] = c, -s, s, c
    return P


def givens_factors(R: np.ndarray) -> list[tuple[int, int, float]]:
    """Planes and angles with ``R = P_1 P_2 ... P_k`` (each a plane rotation)."""
    A = np.array(R, dtype=float)
    d = len(A)
    factors = []
    for col in range(d - 1):
        for row in range(col + 1, d):
            theta = math.atan2(A[row, col], A[col, col])
            if theta != 0.0:
                A = plane_rotation(d, col, row, -theta) @ A
                factors.append((col, row, theta))
    if np.abs(A - np.eye(d)).max() > 1e-9:
        raise ValueError("rotation did not reduce to the identity")
    return factors


# --------------------------------------------------------------------------
# spectral resampling

def spectral_shift(amps: np.ndarray, grid: GridSpec, shift) -> np.ndarray:
    """Return ``f(x + shift)`` sampled on the same nodes."""
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    if not np.any(shift):
        return np.array(amps, dtype=complex)
    phase = sum(k * s for k, s in zip(grid.k_mesh(), shift))
    return np.fft.ifftn(np.fft.fftn(amps) * np.exp(1j * phase))


def _shear(amps: np.ndarray, grid: GridSpec, axis: int, other: int, s: float) -> np.ndarray:
    """``f(x_axis - s * x_other, ...)``: push-forward by ``x_axis += s x_other``."""
    k = grid.wavenumbers(axis).reshape([-1 if i == axis else 1 for i in range(grid.dim)])
    y = grid.axis(other).reshape([-1 if i == other else 1 for i in range(grid.dim)])
    spec = np.fft.fft(amps, axis=axis) * np.exp(-1j * k * s * y)
    return np.fft.ifft(spec, axis=axis)


def _plane_shears(theta: float) -> list[tuple[str, float]]:
    """Shears whose product is the plane rotation by ``theta`` (applied last to first)."""
    if abs(theta) > math.pi / 2:
        half = _plane_shears(theta / 2)
        return half + half
    t = -math.tan(theta / 2)
    return [("p", t), ("q", math.sin(theta)), ("p", t)]


def _shear_matrix(dim, p, q, which, s):
    M = np.eye(dim)
    if which == "p":
        M[p, q] = s
    else:
        M[q, p] = s
    return M


def rotation_steps(R: np.ndarray) -> list[tuple[int, int, str, float]]:
    """Elementary shears ``(p, q, which, s)`` in application order."""
    steps = []
    for p, q, theta in reversed(givens_factors(R)):
        steps += [(p, q, w, s) for w, s in reversed(_plane_shears(theta))]
    return steps


def _outside_mass(grid: GridSpec, rho: np.ndarray, images: np.ndarray) -> float:
    out = ~grid.contains(images)
    return float(np.sum(rho.ravel()[out]) * grid.cell_volume)


def _is_localised(amps: np.ndarray) -> bool:
    a = np.abs(amps)
    edge = 0.0
    for ax in range(a.ndim):
        edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
    return edge <= EDGE_TOL * a.max()


def euclidean_transform_wavefunction(psi: WaveFunction, R, a) -> WaveFunction:
    """Scalar pullback ``psi'(x') = psi(R^T (x' - a))``."""
    grid = psi.grid
    R = np.atleast_2d(np.asarray(R, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if R.shape != (grid.dim, grid.dim) or a.shape != (grid.dim,):
        raise ValueError("R and a must match the grid dimension")
    check_rotation(R)
    if grid.dim == 1 and R[0, 0] != 1.0:
        raise ValueError("rotations need dim >= 2")
    if np.any(np.abs(a) > grid.lengths / 2):
        raise SupportWrap(f"translation {a.tolist()} exceeds half the box")
    rho = np.abs(psi.amplitudes) ** 2
    images = grid.nodes()
    amps = np.array(psi.amplitudes)
    for p, q, which, s in rotation_steps(R):
        images = images @ _shear_matrix(grid.dim, p, q, which, s).T
        if _outside_mass(grid, rho, images) > WRAP_TOL:
            raise SupportWrap("rotation carries support across the box boundary")
        axis, other = (p, q) if which == "p" else (q, p)
        amps = _shear(amps, grid, axis, other, s)
    if _outside_mass(grid, rho, images + a) > WRAP_TOL:
        raise SupportWrap("translation carries support across the box boundary")
    amps = spectral_shift(amps, grid, -a)
    return WaveFunction(grid, amps, psi.time)


def boost_global_phase(model: ParticleModel, v, t: float) -> float:
    """x'-independent part of the boost phase expressed in primed coordinates."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(-0.5 * np.sum(model.mass_array * v**2) * t)


def boost_wavefunction(psi: WaveFunction, model: ParticleModel, v) -> WaveFunction:
    """State seen from a frame moving with velocity ``v`` (one entry per axis).

    ``psi'(x', t) = psi(x' + v t, t) exp[i(1/2 sum m v^2 t - sum m v.(x' + v t))]``,
    resampled onto the same numerical grid, now read as primed coordinates.
    """
    grid = psi.grid
    model.check(grid)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (grid.dim,):
        raise ValueError("boost velocity needs one entry per axis")
    shift = v * psi.time
    if np.any(np.abs(shift) > grid.lengths / 2):
        raise SupportWrap(f"boost shift {shift.tolist()} exceeds half the box")
    mv = model.mass_array * v
    if _is_localised(psi.amplitudes):
        rho = np.abs(psi.amplitudes) ** 2
        if _outside_mass(grid, rho, grid.nodes() - shift) > WRAP_TOL:
            raise SupportWrap("boost shift carries support across the box boundary")
    else:
        turns = mv * grid.lengths / (2 * np.pi)
        if np.any(np.abs(turns - np.round(turns)) > 1e-9):
            raise SupportWrap("box-filling state needs m*v commensurate with the box for a periodic boost")
    shifted = spectral_shift(psi.amplitudes, grid, shift)
    expo = sum(-m * x for m, x in zip(mv, grid.mesh()))
    phase = np.exp(1j * expo) * np.exp(1j * boost_global_phase(model, v, psi.time))
    return WaveFunction(grid, shifted * phase, psi.time)


def check_phase_gradient_shift(psi: WaveFunction, model: ParticleModel, v, node_floor: float | None = None) -> float:
    """Max over valid nodes of ``|grad' S'(x') - (grad S(x' + v t) - m v)|``."""
    grid = psi.grid
    v = np.atleast_1d(np.asarray(v, dtype=float))
    boosted = boost_wavefunction(psi, model, v)
    source = WaveFunction(grid, spectral_shift(psi.amplitudes, grid, v * psi.time), psi.time)
    m = model.mass_array.reshape((-1,) + (1,) * grid.dim)
    floor = node_floor if node_floor is not None else 1e-12 * float((np.abs(psi.amplitudes) ** 2).max())
    primed = phase_gradient(boosted, model, floor)
    orig = phase_gradient(source, model, floor)
    ok = primed.valid & orig.valid
    expected = orig.components * m - (model.mass_array * v).reshape(m.shape)
    resid = np.abs(primed.components * m - expected)
    return float(resid[:, ok].max()) if ok.any() else 0.0


def boosted_potential(v: Potential, velocity) -> Potential:
    """Potential in the boosted frame, for kinds with a well-defined transform."""
    if isinstance(v, Free):
        return v
    if isinstance(v, UniformGradient):
        # V(x' + u t) = g.x' + g.u t; the second term carries no force.
        return v
    raise ValueError(f"boost transform of a {v.kind} potential is not supported")


# --------------------------------------------------------------------------
# accelerated frames (classical)

def accelerated_frame_potential(v: Potential, model: ParticleModel, a) -> Potential:
    """``V' = V + sum_i m_i a_i x_i``; the ``-1/2 sum m a^2 t^2`` term is dropped."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.shape != (model.dim,):
        raise ValueError("acceleration needs one entry per axis")
    if not np.any(a):
        return v
    extra = tuple(model.mass_array * a)
    note = f"-1/2 sum m a^2 t^2 with sum m a^2 = {float(np.sum(model.mass_array * a**2))!r}"
    if isinstance(v, Free):
        return Sum((UniformGradient(extra),), (note,))
    return Sum((v, UniformGradient(extra)), (note,))


def fictitious_acceleration(v: Potential, model: ParticleModel, a, points, t: float = 0.0) -> np.ndarray:
    """``-(grad V' - grad V) / m`` at ``points``; equals ``-a`` for every mass."""
    vp = accelerated_frame_potential(v, model, a)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return -(vp.gradient(pts, t) - v.gradient(pts, t)) / model.mass_array


# --------------------------------------------------------------------------
# audit

def boost_covariance_audit(psi0: WaveFunction, potential: Potential, model: ParticleModel, v, starts,
                           t_final: float, opts: IntegratorOptions = IntegratorOptions(), dt: float = 1e-3,
                           snapshot_stride: int = 10) -> dict:
    """Compare unprimed guidance paths mapped by ``x - v t`` with paths re-derived from the boosted state.

    The primed run uses only ``boost_wavefunction(psi0)`` and the primed
    potential; nothing from the unprimed run is reused.
    """
    if potential.kind not in ("free", "uniform_gradient"):
        raise ValueError("boost audit supports free and uniform_gradient potentials")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    starts = np.asarray(starts, dtype=float).reshape(-1, psi0.grid.dim)
    rec = evolve(psi0, potential, model, t_final, dt, snapshot_stride)
    unprimed = integrate_ensemble(rec, model, starts, opts)
    psi0p = boost_wavefunction(psi0, model, v)
    recp = evolve(psi0p, boosted_potential(potential, v), model, t_final, dt, snapshot_stride)
    primed = integrate_ensemble(recp, model, starts - v * psi0.time, opts)

    gaps, errors = [], []
    for j, (a, b) in enumerate(zip(unprimed, primed)):
        if a.error or b.error:
            errors.append({"start": j, "error": str(a.error or b.error)})
            gaps.append(None)
            continue
        mapped = a.points - np.outer(a.times, v)
        gaps.append(float(np.abs(mapped - b.points).max()))
    good = [g for g in gaps if g is not None]
    return {
        "audit": "boost-covariance",
        "inputs": {
            "grid": psi0.grid.to_dict(), "model": model.to_dict(), "potential": potential.descriptor(),
            "v": v.tolist(), "t_final": t_final, "dt": dt, "snapshot_stride": snapshot_stride,
            "starts": starts.tolist(), "options": opts.to_dict(),
        },
        "per_start_gap": gaps,
        "max_gap": max(good) if good else None,
        "phase_gradient_residual_final": check_phase_gradient_shift(rec.snapshots[-1], model, v, opts.node_floor),
        "global_phase_final": boost_global_phase(model, v, t_final),
        "errors": errors,
    }
