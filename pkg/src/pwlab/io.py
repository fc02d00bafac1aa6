"""On-disk formats.

Field snapshot
    ``<name>.json`` header plus a flat value block ``<name>.bin`` (raw
    little-endian) or ``<name>.csv``.  Values are row-major over the grid
    with axis order as in the GridSpec; vector fields store ``components``
    consecutive blocks (component-major).  Complex values are stored as
    interleaved (re, im) pairs in binary and as ``re,im`` columns in CSV.
    Invalid (near-node) entries of derived fields are NaN.

    Header keys: ``format``, ``kind``, ``grid``, ``time``, ``dtype``
    (``complex128`` | ``float64``), ``components``, ``order``,
    ``byte_order``, ``encoding`` (``binary`` | ``csv``), ``values``.

Evolution record
    A directory with ``manifest.json`` (dt, scheme, potential, model, grid,
    times, snapshot header names) and one field snapshot per time.

Trajectories
    CSV with columns ``trajectory,time,x0..x{d-1}[,v0..v{d-1}]`` plus a JSON
    sidecar with the grid, model, options, scheme and per-trajectory errors.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import DensityField, GridSpec, ParticleModel, VelocityField, WaveFunction
from .guidance import Trajectory
from .schrodinger import EvolutionRecord

FIELD_FORMAT = "pwlab-field/1"
RECORD_FORMAT = "pwlab-record/1"
TRAJECTORY_FORMAT = "pwlab-trajectories/1"


def fmt(x: float) -> str:
    return repr(float(x))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _field_payload(field):
    if isinstance(field, WaveFunction):
        return "wavefunction", field.amplitudes[None], "complex128"
    if isinstance(field, DensityField):
        return "density", field.values[None], "float64"
    if isinstance(field, VelocityField):
        return "velocity", field.components, "float64"
    if hasattr(field, "values") and hasattr(field, "valid"):
        return "scalar", field.values[None], "float64"
    raise TypeError(f"cannot serialise {type(field).__name__}")


def save_field(path, field, encoding: str = "binary") -> Path:
    """Write ``<path>.json`` and its value block; returns the header path."""
    base = Path(path)
    kind, block, dtype = _field_payload(field)
    value_name = base.name + (".bin" if encoding == "binary" else ".csv")
    header = {
        "format": FIELD_FORMAT, "kind": kind, "grid": field.grid.to_dict(), "time": field.time,
        "dtype": dtype, "components": int(block.shape[0]), "order": "row-major",
        "byte_order": "little", "encoding": encoding, "values": value_name,
    }
    flat = block.reshape(block.shape[0], -1)
    if encoding == "binary":
        flat.astype("<c16" if dtype == "complex128" else "<f8").tofile(base.with_name(value_name))
    elif encoding == "csv":
        with open(base.with_name(value_name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if dtype == "complex128":
                w.writerow([f"{p}{c}" for c in range(flat.shape[0]) for p in ("re", "im")])
                for row in flat.T:
                    w.writerow([fmt(v) for z in row for v in (z.real, z.imag)])
            else:
                w.writerow([f"c{c}" for c in range(flat.shape[0])])
                for row in flat.T:
                    w.writerow([fmt(v) for v in row])
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    header_path = base.with_name(base.name + ".json")
    write_json(header_path, header)
    return header_path


def load_field(header_path):
    header_path = Path(header_path)
    header = json.loads(header_path.read_text())
    if header.get("format") != FIELD_FORMAT:
        raise ValueError(f"{header_path} is not a {FIELD_FORMAT} header")
    grid = GridSpec.from_dict(header["grid"])
    ncomp = header["components"]
    complex_ = header["dtype"] == "complex128"
    src = header_path.with_name(header["values"])
    if header["encoding"] == "binary":
        flat = np.fromfile(src, dtype="<c16" if complex_ else "<f8")
    else:
        data = np.loadtxt(src, delimiter=",", skiprows=1, ndmin=2)
        flat = (data[:, 0::2] + 1j * data[:, 1::2]).T if complex_ else data.T
    block = np.asarray(flat).reshape((ncomp,) + grid.shape)
    kind, t = header["kind"], header["time"]
    if kind == "wavefunction":
        return WaveFunction(grid, block[0], t)
    if kind == "density":
        return DensityField(grid, block[0], t)
    if kind == "velocity":
        return VelocityField(grid, block, ~np.isnan(block[0]), t)
    return block[0]


def save_record(directory, record: EvolutionRecord, encoding: str = "binary") -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for k, snap in enumerate(record.snapshots):
        names.append(save_field(d / f"snapshot_{k:05d}", snap, encoding).name)
    manifest = {"format": RECORD_FORMAT, **record.manifest(), "snapshots": names}
    write_json(d / "manifest.json", manifest)
    return d / "manifest.json"


def load_record(directory) -> EvolutionRecord:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    snaps = tuple(load_field(d / name) for name in manifest["snapshots"])
    model = ParticleModel(tuple(manifest["model"]["masses"])) if manifest.get("model") else None
    return EvolutionRecord(snaps, manifest["dt"], manifest["scheme"], manifest.get("potential"), model)


def save_trajectories(path, trajectories: list[Trajectory], sidecar: dict | None = None) -> Path:
    """Write the CSV and ``<path>.json`` sidecar; returns the CSV path."""
    path = Path(path)
    dim = trajectories[0].dim if trajectories else 0
    with_vel = any(t.velocities is not None for t in trajectories)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trajectory", "time"] + [f"x{a}" for a in range(dim)] + ([f"v{a}" for a in range(dim)] if with_vel else []))
        for j, tr in enumerate(trajectories):
            for i, t in enumerate(tr.times):
                row = [str(j), fmt(t)] + [fmt(x) for x in tr.points[i]]
                if with_vel:
                    vel = tr.velocities[i] if tr.velocities is not None else [np.nan] * dim
                    row += [fmt(x) for x in vel]
                w.writerow(row)
    meta = {
        "format": TRAJECTORY_FORMAT,
        "scheme": trajectories[0].scheme if trajectories else None,
        "count": len(trajectories),
        "dim": dim,
        "errors": {str(j): str(t.error) for j, t in enumerate(trajectories) if t.error is not None},
        **(sidecar or {}),
    }
    write_json(path.with_suffix(path.suffix + ".json"), meta)
    return path


def load_trajectories(path) -> list[Trajectory]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    dim = meta["dim"]
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    out = []
    for j in range(meta["count"]):
        rows = data[data[:, 0] == j]
        vel = rows[:, 2 + dim : 2 + 2 * dim] if rows.shape[1] > 2 + dim else None
        out.append(Trajectory(rows[:, 1], rows[:, 2 : 2 + dim], vel, meta["scheme"]))
    return out


def save_points(path, points: np.ndarray, weights: np.ndarray | None = None) -> Path:
    path = Path(path)
    pts = np.asarray(points, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{a}" for a in range(pts.shape[1])] + (["weight"] if weights is not None else []))
        for i, p in enumerate(pts):
            w.writerow([fmt(x) for x in p] + ([fmt(weights[i])] if weights is not None else []))
    return path
