"""Potential library shared by the quantum and classical integrators.

Every potential answers three questions: values on a grid, values at
arbitrary points, and the gradient at arbitrary points (or on a grid).
Points are ``(n, dim)`` arrays; time ``t`` is a float.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GridSpec, central_derivative, interpolate_many


def _pts(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


class Potential:
    kind = "abstract"
    time_dependent = False
    # V depends on position only through |x - centre| (invariant under
    # rotations about that centre).
    distance_only = False

    def at(self, x, t: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x, t: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def values(self, grid: GridSpec, t: float = 0.0) -> np.ndarray:
        return self.at(grid.nodes(), t).reshape(grid.shape)

    def gradient_grid(self, grid: GridSpec, t: float = 0.0) -> np.ndarray:
        g = self.gradient(grid.nodes(), t)
        return np.moveaxis(g, -1, 0).reshape((grid.dim,) + grid.shape)

    def descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Free(Potential):
    kind = "free"
    distance_only = True

    def at(self, x, t=0.0):
        return np.zeros(len(_pts(x)))

    def gradient(self, x, t=0.0):
        return np.zeros_like(_pts(x))

    def descriptor(self):
        return {"kind": "free"}


@dataclass(frozen=True)
class Harmonic(Potential):
    """``V = sum_a k_a x_a^2 / 2`` centred on the origin."""

    k: tuple[float, ...]
    kind = "harmonic"

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(v) for v in np.atleast_1d(self.k)))

    @property
    def distance_only(self):
        return len(set(self.k)) == 1

    def at(self, x, t=0.0):
        x = _pts(x)
        return 0.5 * np.sum(np.array(self.k) * x**2, axis=-1)

    def gradient(self, x, t=0.0):
        return np.array(self.k) * _pts(x)

    def frequencies(self, masses) -> np.ndarray:
        return np.sqrt(np.array(self.k) / np.asarray(masses, dtype=float))

    def descriptor(self):
        return {"kind": "harmonic", "k": list(self.k)}


@dataclass(frozen=True)
class GaussianBarrier(Potential):
    """``V = height * exp(-|x - center|^2 / (2 width^2))``."""

    height: float
    width: float
    center: tuple[float, ...]
    kind = "gaussian_barrier"
    distance_only = True

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("barrier width must be positive")
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))

    def at(self, x, t=0.0):
        d = _pts(x) - np.array(self.center)
        return self.height * np.exp(-np.sum(d**2, axis=-1) / (2 * self.width**2))

    def gradient(self, x, t=0.0):
        d = _pts(x) - np.array(self.center)
        return -d / self.width**2 * self.at(x, t)[:, None]

    def descriptor(self):
        return {"kind": "gaussian_barrier", "height": self.height, "width": self.width,
                "center": list(self.center)}


@dataclass(frozen=True)
class UniformGradient(Potential):
    """``V = g(t) . x`` with ``g(t) = g + g_rate * t`` (constant force ``-g``)."""

    g: tuple[float, ...]
    g_rate: tuple[float, ...] | None = None
    kind = "uniform_gradient"

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(float(v) for v in np.atleast_1d(self.g)))
        if self.g_rate is not None:
            rate = tuple(float(v) for v in np.atleast_1d(self.g_rate))
            object.__setattr__(self, "g_rate", rate if any(rate) else None)

    @property
    def time_dependent(self):
        return self.g_rate is not None

    @property
    def distance_only(self):
        return not any(self.g) and self.g_rate is None

    def g_at(self, t: float) -> np.ndarray:
        g = np.array(self.g)
        return g if self.g_rate is None else g + np.array(self.g_rate) * t

    def at(self, x, t=0.0):
        return _pts(x) @ self.g_at(t)

    def gradient(self, x, t=0.0):
        return np.broadcast_to(self.g_at(t), _pts(x).shape).copy()

    def descriptor(self):
        d = {"kind": "uniform_gradient", "g": list(self.g)}
        if self.g_rate is not None:
            d["g_rate"] = list(self.g_rate)
        return d


@dataclass(frozen=True, eq=False)
class Tabulated(Potential):
    """Potential given as a table on a grid; multilinear between nodes."""

    grid: GridSpec
    table: np.ndarray
    kind = "custom"

    def __post_init__(self):
        tab = np.asarray(self.table, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(tab)):
            raise ValueError("tabulated potential must be finite")
        tab = tab.copy()
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)

    def values(self, grid, t=0.0):
        if grid == self.grid:
            return np.array(self.table)
        return self.at(grid.nodes(), t).reshape(grid.shape)

    def at(self, x, t=0.0):
        ok = np.ones(self.grid.shape, dtype=bool)
        return interpolate_many(self.table, ok, self.grid, _pts(x))[0]

    def gradient(self, x, t=0.0):
        grads = np.stack([central_derivative(self.table, self.grid, a) for a in range(self.grid.dim)])
        ok = np.ones(self.grid.shape, dtype=bool)
        return interpolate_many(grads, ok, self.grid, _pts(x))[0]

    def descriptor(self):
        return {"kind": "custom", "grid": self.grid.to_dict(), "table": self.table.ravel().tolist()}


@dataclass(frozen=True)
class Sum(Potential):
    """Sum of potentials; ``dropped`` notes gradient-free terms left out."""

    terms: tuple[Potential, ...]
    dropped: tuple[str, ...] = field(default=())
    kind = "sum"

    @property
    def time_dependent(self):
        return any(p.time_dependent for p in self.terms)

    @property
    def distance_only(self):
        return all(p.distance_only for p in self.terms)

    def at(self, x, t=0.0):
        return sum(p.at(x, t) for p in self.terms)

    def gradient(self, x, t=0.0):
        return sum(p.gradient(x, t) for p in self.terms)

    def values(self, grid, t=0.0):
        return sum(p.values(grid, t) for p in self.terms)

    def descriptor(self):
        d = {"kind": "sum", "terms": [p.descriptor() for p in self.terms]}
        if self.dropped:
            d["dropped"] = list(self.dropped)
        return d


def potential_from_dict(d: dict) -> Potential:
    kind = d.get("kind", "free")
    if kind == "free":
        return Free()
    if kind == "harmonic":
        return Harmonic(tuple(d["k"]))
    if kind == "gaussian_barrier":
        return GaussianBarrier(float(d["height"]), float(d["width"]), tuple(d["center"]))
    if kind == "uniform_gradient":
        return UniformGradient(tuple(d["g"]), tuple(d["g_rate"]) if d.get("g_rate") else None)
    if kind == "custom":
        return Tabulated(GridSpec.from_dict(d["grid"]), np.array(d["table"]))
    if kind == "sum":
        return Sum(tuple(potential_from_dict(t) for t in d["terms"]), tuple(d.get("dropped", ())))
    raise ValueError(f"unknown potential kind {kind!r}")
