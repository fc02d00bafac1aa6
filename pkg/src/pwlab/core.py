"""Grids, wavefunctions, derived fields, interpolation and density sampling.

Everything lives on a uniform periodic grid.  Arrays are stored with
``indexing='ij'`` so axis ``a`` of an amplitude array is configuration axis
``a`` of the grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateDensity, NodeProximity

DEFAULT_NODE_FLOOR_REL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on the box ``[lo, hi)`` per axis.

    Node ``j`` of axis ``a`` sits at ``lo[a] + j * spacing[a]``.  Each node
    owns the cell centred on it, so cells span ``node +- spacing/2``.
    """

    points: tuple[int, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        points = tuple(int(n) for n in np.atleast_1d(self.points))
        lo = tuple(float(x) for x in np.atleast_1d(self.lo))
        hi = tuple(float(x) for x in np.atleast_1d(self.hi))
        if not 1 <= len(points) <= 3:
            raise ValueError(f"grid dimension must be 1..3, got {len(points)}")
        if not len(points) == len(lo) == len(hi):
            raise ValueError("points, lo and hi must have one entry per axis")
        for n in points:
            if n < 16 or n & (n - 1):
                raise ValueError(f"points per axis must be a power of two >= 16, got {n}")
        for a, b in zip(lo, hi):
            if not (np.isfinite(a) and np.isfinite(b) and b > a):
                raise ValueError(f"invalid extent [{a}, {b})")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, n: int, lo: float, hi: float, dim: int = 1) -> "GridSpec":
        return cls((n,) * dim, (lo,) * dim, (hi,) * dim)

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def lengths(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)

    @property
    def spacing(self) -> np.ndarray:
        return self.lengths / np.array(self.points)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, a: int) -> np.ndarray:
        return self.lo[a] + self.spacing[a] * np.arange(self.points[a])

    def axes(self) -> list[np.ndarray]:
        return [self.axis(a) for a in range(self.dim)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def nodes(self) -> np.ndarray:
        """All node coordinates as an ``(size, dim)`` array in row-major order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=-1)

    def wavenumbers(self, a: int) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.points[a], d=self.spacing[a])

    def k_mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.wavenumbers(a) for a in range(self.dim)], indexing="ij")

    def wrap(self, x) -> np.ndarray:
        """Map points periodically into ``[lo, hi)``."""
        x = np.asarray(x, dtype=float)
        lo = np.array(self.lo)
        return lo + np.mod(x - lo, self.lengths)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all((x >= np.array(self.lo)) & (x < np.array(self.hi)), axis=-1)

    def to_dict(self) -> dict:
        return {"points": list(self.points), "lo": list(self.lo), "hi": list(self.hi),
                "boundary": "periodic"}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(d["points"]), tuple(d["lo"]), tuple(d["hi"]))


@dataclass(frozen=True)
class ParticleModel:
    """One inertial mass per configuration-space axis."""

    masses: tuple[float, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        masses = tuple(float(m) for m in np.atleast_1d(self.masses))
        if not masses or any(not (np.isfinite(m) and m > 0) for m in masses):
            raise ValueError(f"masses must be positive and finite, got {masses}")
        if self.labels is not None and len(self.labels) != len(masses):
            raise ValueError("labels must match masses")
        object.__setattr__(self, "masses", masses)

    @property
    def dim(self) -> int:
        return len(self.masses)

    @property
    def mass_array(self) -> np.ndarray:
        return np.array(self.masses)

    def check(self, grid: GridSpec) -> None:
        if self.dim != grid.dim:
            raise ValueError(f"model has {self.dim} masses but grid has {grid.dim} axes")

    def scaled(self, factor: float) -> "ParticleModel":
        return ParticleModel(tuple(m * factor for m in self.masses), self.labels)

    def to_dict(self) -> dict:
        d = {"masses": list(self.masses)}
        if self.labels is not None:
            d["labels"] = list(self.labels)
        return d


@dataclass(frozen=True)
class WaveFunction:
    grid: GridSpec
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} amplitudes, got {amps.size}")
        object.__setattr__(self, "amplitudes", _frozen(amps.reshape(self.grid.shape)))
        object.__setattr__(self, "time", float(self.time))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell_volume))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes / self.norm(), self.time)

    def with_amplitudes(self, amplitudes, time: float | None = None) -> "WaveFunction":
        return WaveFunction(self.grid, amplitudes, self.time if time is None else time)


@dataclass(frozen=True)
class DensityField:
    grid: GridSpec
    values: np.ndarray
    time: float = 0.0
    probability: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if np.any(vals < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "values", _frozen(vals))

    def total(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    @property
    def valid(self) -> np.ndarray:
        return np.ones(self.grid.shape, dtype=bool)

    def marginal(self, axis: int) -> np.ndarray:
        """Density integrated over every axis except ``axis``."""
        others = tuple(a for a in range(self.grid.dim) if a != axis)
        dv = np.prod([self.grid.spacing[a] for a in others]) if others else 1.0
        return np.sum(self.values, axis=others) * dv


@dataclass(frozen=True)
class VelocityField:
    """Vector field on the grid; ``components`` has shape ``(dim, *grid.shape)``.

    Nodes with ``valid == False`` hold NaN components.
    """

    grid: GridSpec
    components: np.ndarray
    valid: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float).reshape((self.grid.dim,) + self.grid.shape)
        valid = np.asarray(self.valid, dtype=bool).reshape(self.grid.shape)
        comps = np.where(valid, comps, np.nan)
        object.__setattr__(self, "components", _frozen(comps))
        object.__setattr__(self, "valid", _frozen(valid))

    @property
    def values(self) -> np.ndarray:
        return self.components


# --------------------------------------------------------------------------
# spectral / finite-difference derivatives

def spectral_derivative(f: np.ndarray, grid: GridSpec, axis: int, order: int = 1) -> np.ndarray:
    """Fourier derivative of a periodic grid function along one axis."""
    k = grid.wavenumbers(axis)
    mult = (1j * k) ** order
    if order % 2 == 1 and grid.points[axis] % 2 == 0:
        mult[grid.points[axis] // 2] = 0.0
    shape = [1] * grid.dim
    shape[axis] = -1
    out = np.fft.ifft(np.fft.fft(f, axis=axis) * mult.reshape(shape), axis=axis)
    return out.real if np.isrealobj(f) else out


def central_derivative(f: np.ndarray, grid: GridSpec, axis: int, order: int = 1) -> np.ndarray:
    """Second-order periodic central differences."""
    h = grid.spacing[axis]
    fp = np.roll(f, -1, axis=axis)
    fm = np.roll(f, 1, axis=axis)
    if order == 1:
        return (fp - fm) / (2 * h)
    if order == 2:
        return (fp - 2 * f + fm) / h**2
    raise ValueError("central differences support order 1 or 2")


def derivative(f, grid, axis, order=1, method="spectral"):
    if method == "spectral":
        return spectral_derivative(f, grid, axis, order)
    if method == "central":
        return central_derivative(f, grid, axis, order)
    raise ValueError(f"unknown derivative method {method!r}")


def node_mask(rho: np.ndarray, node_floor: float | None) -> np.ndarray:
    if node_floor is None:
        node_floor = DEFAULT_NODE_FLOOR_REL * float(rho.max())
    if node_floor <= 0:
        raise ValueError("node_floor must be positive")
    return rho >= node_floor


# --------------------------------------------------------------------------
# operations

def density(psi: WaveFunction) -> DensityField:
    rho = np.abs(psi.amplitudes) ** 2
    return DensityField(psi.grid, rho, psi.time, probability=abs(psi.norm() - 1) < 1e-8)


def phase_gradient(psi: WaveFunction, model: ParticleModel, node_floor: float | None = None,
                   method: str = "spectral") -> VelocityField:
    """Guidance velocity ``Im(psi* d_a psi) / (m_a |psi|^2)`` per axis.

    The phase itself is never unwrapped.  ``node_floor`` defaults to
    ``1e-12 * max|psi|^2``; nodes below it are marked invalid.
    """
    grid = psi.grid
    model.check(grid)
    amps = psi.amplitudes
    rho = np.abs(amps) ** 2
    valid = node_mask(rho, node_floor)
    safe = np.where(valid, rho, 1.0)
    comps = np.empty((grid.dim,) + grid.shape)
    for a in range(grid.dim):
        d = derivative(amps, grid, a, 1, method)
        comps[a] = np.imag(np.conj(amps) * d) / (model.masses[a] * safe)
    return VelocityField(grid, comps, valid, psi.time)


Field = Union[VelocityField, DensityField]


def _stencil(grid: GridSpec, points: np.ndarray):
    """Corner indices and multilinear weights for each query point."""
    u = (grid.wrap(points) - np.array(grid.lo)) / grid.spacing
    i0 = np.floor(u).astype(np.int64)
    frac = u - i0
    n = np.array(grid.points)
    i0 = np.mod(i0, n)
    i1 = np.mod(i0 + 1, n)
    corners = []
    for bits in range(2 ** grid.dim):
        idx = []
        w = np.ones(len(points))
        for a in range(grid.dim):
            if bits >> a & 1:
                idx.append(i1[:, a])
                w = w * frac[:, a]
            else:
                idx.append(i0[:, a])
                w = w * (1 - frac[:, a])
        corners.append((tuple(idx), w))
    return corners


def interpolate_many(values: np.ndarray, valid: np.ndarray, grid: GridSpec, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised multilinear interpolation with periodic wrap.

    ``values`` has shape ``grid.shape`` (scalar) or ``(c, *grid.shape)``.
    Returns ``(result, ok)`` where ``ok`` is False for points whose stencil
    touches an invalid node.  Result rows for those points are NaN.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scalar = values.ndim == grid.dim
    vals = values[None] if scalar else values
    out = np.zeros((len(pts), vals.shape[0]))
    ok = np.ones(len(pts), dtype=bool)
    for idx, w in _stencil(grid, pts):
        ok &= valid[idx]
        out += w[:, None] * np.stack([v[idx] for v in vals], axis=-1)
    out[~ok] = np.nan
    return (out[:, 0] if scalar else out), ok


def interpolate(field: Field, x) -> np.ndarray | float:
    """Multilinear value of ``field`` at configuration point ``x``."""
    x = np.asarray(x, dtype=float)
    pts = x.reshape(1, -1) if x.ndim == 1 else x
    out, ok = interpolate_many(field.values, field.valid, field.grid, pts)
    if not ok.all():
        bad = pts[np.argmin(ok)]
        raise NodeProximity(f"stencil of point {bad.tolist()} touches a node below the floor",
                            time=field.time, location=bad.tolist())
    if x.ndim == 1:
        return float(out[0]) if out.ndim == 1 else out[0]
    return out


def sample_density(density: DensityField, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` configuration points from a gridded density.

    Inverse CDF over the flattened cell index, then uniform jitter within the
    chosen node's cell.  Returns an ``(n, dim)`` array.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = density.grid
    flat = density.values.ravel()
    total = float(flat.sum() * grid.cell_volume)
    if not total >= 1e-12:
        raise DegenerateDensity(f"density mass {total:.3e} is too small to sample")
    cdf = np.cumsum(flat)
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    jitter = rng.random((n, grid.dim)) - 0.5
    cell = np.minimum(np.searchsorted(cdf, u, side="right"), flat.size - 1)
    idx = np.stack(np.unravel_index(cell, grid.shape), axis=-1)
    pts = np.array(grid.lo) + (idx + jitter) * grid.spacing
    return grid.wrap(pts)
