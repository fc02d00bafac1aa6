"""``pwlab`` command-line entry point.

    pwlab <command> --config <file> [--set key=value]... [--out dir] [--threads n] [--seed n]

Each command writes ``report.json``, CSV data, optional SVG plots and
``manifest.json`` into the output directory.  Exit code 0 iff every check
passes, 1 on a failed check or module error, 2 on an invalid config.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io, svg
from .audits import accelerated_frame_audit, continuity_refinement, equivalence_audit, euclidean_covariance_audit
from .bohm import integrate_second_order_batch
from .config import (SCHEMA, build_grid, build_model, build_options, build_potential, build_starts, build_state,
                     load_config, tolerances)
from .core import density, sample_density
from .equivariance import EnsembleState, coefficient_uniqueness_experiment, ks_distance, transport_ensemble
from .errors import ConfigInvalid, PilotWaveError
from .frames import boost_covariance_audit, rotation_2d
from .guidance import guidance_history, integrate_ensemble
from .schrodinger import evolve, expected_energy

COMMANDS = ["evolve", "trajectories", "second-order", "boost-audit", "frame-audit", "accel-audit",
            "equivalence-audit", "continuity-audit", "ensemble", "mass-audit"]


class Run:
    """Per-invocation context: resolved config, output directory, check list."""

    def __init__(self, command: str, cfg: dict, out: Path, workers: int):
        self.command, self.cfg, self.out, self.workers = command, cfg, out, workers
        self.tol = tolerances(cfg, command)
        self.checks: list[dict] = []
        self.files: list[str] = []

    def check(self, name: str, value, op: str, threshold) -> bool:
        if value is None or (isinstance(value, float) and math.isnan(value)):
            ok = False
        else:
            ok = {"<": value < threshold, "<=": value <= threshold, ">": value > threshold, ">=": value >= threshold}[op]
        self.checks.append({"name": name, "value": value, "op": op, "threshold": threshold, "pass": bool(ok)})
        return ok

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def plot(self, name: str, text: str) -> None:
        if self.cfg["output"]["svg"]:
            self.path(name).write_text(text)

    @property
    def stamp(self):
        return _dt.datetime.now().isoformat(timespec="seconds") if self.cfg["output"]["svg_timestamp"] else None

    # shared builders
    def setup(self):
        grid = build_grid(self.cfg)
        model = build_model(self.cfg, grid)
        potential = build_potential(self.cfg)
        return grid, model, potential

    def record(self, psi0, potential, model):
        ev = self.cfg["evolution"]
        return evolve(psi0, potential, model, psi0.time + ev["t_final"], ev["dt"], ev["snapshot_stride"])


def _traj_plot(run: Run, name, trajs, title):
    series = [(t.times, t.points[:, 0], None) for t in trajs[:40]]
    run.plot(name, svg.line_plot(series, title, "t", "x0", run.stamp))


def _density_plot(run: Run, name, snaps, title):
    grid = snaps[0].grid
    if grid.dim == 1:
        series = [(grid.axis(0), np.abs(s.amplitudes) ** 2, f"t={s.time:.3g}") for s in snaps]
        run.plot(name, svg.line_plot(series, title, "x", "|psi|^2", run.stamp))
    elif grid.dim == 2:
        rho = np.abs(snaps[-1].amplitudes) ** 2
        run.plot(name, svg.heatmap(rho, (grid.lo[0], grid.hi[0], grid.lo[1], grid.hi[1]), title, timestamp=run.stamp))


# --------------------------------------------------------------------------
# commands

def cmd_evolve(run: Run) -> dict:
    grid, model, potential = run.setup()
    psi0 = build_state(run.cfg, grid, model, potential)
    rec = run.record(psi0, potential, model)
    norms = [s.norm() for s in rec.snapshots]
    energies = [expected_energy(s, potential, model) for s in rec.snapshots]
    with open(run.path("norms.csv"), "w") as fh:
        fh.write("time,norm,energy\n")
        for s, n, e in zip(rec.snapshots, norms, energies):
            fh.write(f"{io.fmt(s.time)},{io.fmt(n)},{io.fmt(e)}\n")
    if run.cfg["evolution"]["save_snapshots"]:
        io.save_record(run.out / "record", rec, run.cfg["output"]["encoding"])
        run.files.append("record/")
    drift = float(max(abs(n - 1) for n in norms))
    e0 = energies[0]
    run.check("norm_drift", drift, "<", run.tol["norm_drift"])
    if "energy_drift" in run.tol:
        run.check("energy_drift", float(max(abs(e - e0) for e in energies) / max(abs(e0), 1e-300)), "<", run.tol["energy_drift"])
    _density_plot(run, "density.svg", [rec.snapshots[0], rec.snapshots[-1]], "density")
    return {"record": rec.manifest(), "norm_drift": drift, "energy_initial": e0, "energy_final": energies[-1]}


def _trajectory_command(run: Run, second: bool) -> dict:
    grid, model, potential = run.setup()
    psi0 = build_state(run.cfg, grid, model, potential)
    rec = run.record(psi0, potential, model)
    starts = build_starts(run.cfg, grid)
    opts = build_options(run.cfg, run.workers)
    if second:
        so = run.cfg["second_order"]
        if so["v0"] == "guidance":
            v0, ok = guidance_history(rec, model, opts)(starts, rec.t_start)
            if not ok.all():
                raise PilotWaveError("a start sits in a node region; guidance velocity undefined")
        else:
            v0 = np.broadcast_to(np.asarray(so["v0"], dtype=float), starts.shape).copy()
        if so["v0_offset"] is not None:
            v0 = v0 + np.asarray(so["v0_offset"], dtype=float)
        trajs = integrate_second_order_batch(rec, potential, model, starts, v0, opts)
    else:
        trajs = integrate_ensemble(rec, model, starts, opts)
    name = "second_order.csv" if second else "trajectories.csv"
    io.save_trajectories(run.path(name), trajs, {"grid": grid.to_dict(), "model": model.to_dict(),
                                                  "options": opts.to_dict(), "potential": potential.descriptor()})
    run.files.append(name + ".json")
    failures = [str(t.error) for t in trajs if t.error is not None]
    disp = [float(np.abs(t.points - t.points[0]).max()) for t in trajs]
    run.check("failures", len(failures), "<=", run.tol["max_failures"])
    if "max_displacement" in run.tol:
        run.check("max_displacement", max(disp), "<", run.tol["max_displacement"])
    _traj_plot(run, "trajectories.svg", trajs, "second-order paths" if second else "guidance paths")
    return {"starts": starts.tolist(), "endpoints": [t.end.tolist() for t in trajs],
            "max_displacement_per_start": disp, "failures": failures, "t_end": rec.t_end}


def cmd_trajectories(run):
    return _trajectory_command(run, False)


def cmd_second_order(run):
    return _trajectory_command(run, True)


def _refined_cfg(cfg, factor, refine_grid):
    import copy
    c = copy.deepcopy(cfg)
    c["evolution"]["dt"] = cfg["evolution"]["dt"] / factor
    c["integration"]["dt"] = cfg["integration"]["dt"] / factor
    if refine_grid:
        c["grid"]["points"] = [int(n * factor) for n in cfg["grid"]["points"]]
    return c


def cmd_boost_audit(run: Run) -> dict:
    def one(cfg):
        grid = build_grid(cfg)
        model = build_model(cfg, grid)
        potential = build_potential(cfg)
        psi0 = build_state(cfg, grid, model, potential)
        ev = cfg["evolution"]
        return boost_covariance_audit(psi0, potential, model, cfg["boost"]["v"], build_starts(cfg, grid),
                                      psi0.time + ev["t_final"], build_options(cfg, run.workers), ev["dt"],
                                      ev["snapshot_stride"])

    rep = one(run.cfg)
    run.check("max_gap", rep["max_gap"], "<", run.tol["max_gap"])
    run.check("phase_gradient_residual", rep["phase_gradient_residual_final"], "<", run.tol["phase_gradient_residual"])
    ref = run.cfg["refinement"]
    if ref["enabled"]:
        rows = []
        for factor in (0.5, 2.0):
            r = one(_refined_cfg(run.cfg, factor, ref["refine_grid"]))
            rows.append({"factor": factor, "max_gap": r["max_gap"], "dt": run.cfg["evolution"]["dt"] / factor})
        coarse, fine = rows[0]["max_gap"], rows[1]["max_gap"]
        rep["refinement"] = {"levels": rows, "coarse_to_base": coarse / rep["max_gap"], "base_to_fine": rep["max_gap"] / fine}
        run.check("refinement_ratio_coarse", rep["refinement"]["coarse_to_base"], ">=", run.tol["min_refinement_ratio"])
        run.check("refinement_ratio_fine", rep["refinement"]["base_to_fine"], ">=", run.tol["min_refinement_ratio"])
    with open(run.path("gaps.csv"), "w") as fh:
        fh.write("start,x0,gap\n")
        for j, (s, g) in enumerate(zip(rep["inputs"]["starts"], rep["per_start_gap"])):
            fh.write(f"{j},{io.fmt(s[0])},{'nan' if g is None else io.fmt(g)}\n")
    x = [s[0] for s in rep["inputs"]["starts"]]
    run.plot("gaps.svg", svg.line_plot([(x, [g if g is not None else np.nan for g in rep["per_start_gap"]], "gap")],
                                       "boost covariance gap per start", "x0", "max |X - vt - X'|", run.stamp))
    return rep


def cmd_frame_audit(run: Run) -> dict:
    grid, model, potential = run.setup()
    psi0 = build_state(run.cfg, grid, model, potential)
    eu = run.cfg["euclidean"]
    if "rotation" in eu:
        R = np.asarray(eu["rotation"], dtype=float)
    elif grid.dim == 2:
        R = rotation_2d(eu["angle"])
    else:
        raise ConfigInvalid("euclidean.angle applies to 2D grids; give euclidean.rotation otherwise")
    a = np.asarray(eu.get("translation", [0.0] * grid.dim), dtype=float)
    ev = run.cfg["evolution"]
    rep, ra, rb = euclidean_covariance_audit(psi0, potential, model, R, a, psi0.time + ev["t_final"], ev["dt"])
    run.check("max_pointwise_diff", rep["max_pointwise_diff"], "<", run.tol["max_pointwise_diff"])
    diff = np.abs(ra.amplitudes - rb.amplitudes)
    if grid.dim == 1:
        io.save_field(run.out / "diff", ra.with_amplitudes(diff), "csv")
    with open(run.path("summary.csv"), "w") as fh:
        fh.write("quantity,value\n")
        for k in ("max_pointwise_diff", "potential_mismatch_on_support", "norm_a", "norm_b"):
            fh.write(f"{k},{io.fmt(rep[k])}\n")
    if grid.dim == 2:
        run.plot("diff.svg", svg.heatmap(diff, (grid.lo[0], grid.hi[0], grid.lo[1], grid.hi[1]),
                                         "|evolve-then-transform - transform-then-evolve|", timestamp=run.stamp))
    return rep


def cmd_accel_audit(run: Run) -> dict:
    grid, model, potential = run.setup()
    ac = run.cfg["acceleration"]
    starts = build_starts(run.cfg, grid)
    rep, unprimed, primed = accelerated_frame_audit(potential, model, ac["a"], starts, ac["v0"], ac["t_final"], ac["dt"],
                                                    ac["alt_masses"])
    run.check("max_gap", rep["max_gap"], "<", run.tol["max_gap"])
    run.check("universality", rep["fictitious_acceleration_deviation"], "<", run.tol["universality"])
    io.save_trajectories(run.path("primed.csv"), primed, {"frame": "accelerated", "a": ac["a"]})
    io.save_trajectories(run.path("unprimed.csv"), unprimed, {"frame": "rest"})
    _traj_plot(run, "primed.svg", primed, "classical paths in the accelerated frame")
    return rep


def cmd_equivalence_audit(run: Run) -> dict:
    grid, model, potential = run.setup()
    psi0 = build_state(run.cfg, grid, model, potential)
    rec = run.record(psi0, potential, model)
    starts = build_starts(run.cfg, grid)
    offset = run.cfg["second_order"]["v0_offset"]
    rep = equivalence_audit(rec, potential, model, starts, build_options(run.cfg, run.workers), offset)
    run.check("max_gap", rep["max_gap"], "<", run.tol["max_gap"])
    if offset is not None:
        run.check("mismatched_min_gap", rep["mismatched_min_gap"], ">", run.tol["min_mismatch_gap"])
    with open(run.path("gaps.csv"), "w") as fh:
        fh.write("start,x0,gap\n")
        for j, (s, g) in enumerate(zip(starts, rep["per_start_gap"])):
            fh.write(f"{j},{io.fmt(s[0])},{io.fmt(g)}\n")
    run.plot("gaps.svg", svg.line_plot([(starts[:, 0], rep["per_start_gap"], "first vs second order")],
                                       "equivalence gap per start", "x0", "max gap", run.stamp))
    return rep


def cmd_continuity_audit(run: Run) -> dict:
    grid, model, potential = run.setup()
    psi0 = build_state(run.cfg, grid, model, potential)
    ev, co = run.cfg["evolution"], run.cfg["continuity"]
    dts = [ev["dt"] / 2**i for i in range(co["levels"])]
    rep = continuity_refinement(psi0, potential, model, psi0.time + co["t_eval"], psi0.time + ev["t_final"], dts,
                                ev["snapshot_stride"], run.cfg["integration"]["node_floor"])
    run.check("residual", rep["levels"][0]["residual"], "<", run.tol["max_residual"])
    rounded = round(min(rep["observed_orders"]), int(run.tol["order_decimals"]))
    rep["min_observed_order_rounded"] = rounded
    run.check("observed_order", rounded, ">=", run.tol["min_order"])
    with open(run.path("refinement.csv"), "w") as fh:
        fh.write("dt,t,residual\n")
        for row in rep["levels"]:
            fh.write(f"{io.fmt(row['dt'])},{io.fmt(row['t'])},{io.fmt(row['residual'])}\n")
    run.plot("refinement.svg", svg.line_plot([(np.log10(dts), np.log10([r["residual"] for r in rep["levels"]]), "residual")],
                                             "continuity residual", "log10 dt", "log10 residual", run.stamp))
    return rep


def _ensemble0(run: Run, psi0) -> EnsembleState:
    en = run.cfg["ensemble"]
    if en["kind"] == "equilibrium":
        pts = sample_density(density(psi0), en["n"], run.cfg["seed"])
    else:
        rng = np.random.default_rng(run.cfg["seed"])
        c = np.asarray(en["cluster_center"], dtype=float)
        pts = c + en["cluster_width"] * (rng.random((en["n"], psi0.grid.dim)) - 0.5)
    return EnsembleState(pts, None, psi0.time)


def cmd_ensemble(run: Run) -> dict:
    grid, model, potential = run.setup()
    psi0 = build_state(run.cfg, grid, model, potential)
    rec = run.record(psi0, potential, model)
    ens0 = _ensemble0(run, psi0)
    res = transport_ensemble(rec, model, ens0, build_options(run.cfg, run.workers))
    target = density(rec.snapshots[-1])
    ks0 = ks_distance(ens0.points, density(psi0))
    ks = ks_distance(res.points, target, res.weights)
    io.save_points(run.path("endpoints.csv"), res.points, res.weights)
    if run.cfg["ensemble"]["kind"] == "equilibrium":
        run.check("ks_final", float(ks.max()), "<", run.tol["max_ks"])
    else:
        run.check("ks_final_nonequilibrium", float(ks.max()), ">", run.tol["min_ks_nonequilibrium"])
    if grid.dim == 1:
        hist, edges = np.histogram(res.points[:, 0], bins=80, range=(grid.lo[0], grid.hi[0]), weights=res.weights, density=True)
        centers = 0.5 * (edges[1:] + edges[:-1])
        run.plot("endpoints.svg", svg.line_plot([(centers, hist, "endpoints"), (grid.axis(0), target.values, "|psi_t|^2")],
                                                "transported ensemble", "x", "density", run.stamp))
    return {"n": len(ens0), "kind": run.cfg["ensemble"]["kind"], "ks_initial": ks0.tolist(), "ks_final": ks.tolist(),
            "dropped_weight": res.dropped_weight, "dropped": res.dropped.tolist(), "t_end": res.time}


def cmd_mass_audit(run: Run) -> dict:
    grid, model, potential = run.setup()
    psi0 = build_state(run.cfg, grid, model, potential)
    rec = run.record(psi0, potential, model)
    ma = run.cfg["mass_audit"]
    rep = coefficient_uniqueness_experiment(rec, model, ma["mass_scale"], ma["n"], run.cfg["seed"],
                                            build_options(run.cfg, run.workers))
    run.check("ks_control", rep["ks_control_max"], "<", run.tol["max_control_ks"])
    run.check("ratio", rep["ratio"], ">", run.tol["min_ratio"])
    with open(run.path("ks.csv"), "w") as fh:
        fh.write("axis,ks_control,ks_wrong\n")
        for a, (c, w) in enumerate(zip(rep["ks_control"], rep["ks_wrong"])):
            fh.write(f"{a},{io.fmt(c)},{io.fmt(w)}\n")
    return rep


HANDLERS = {
    "evolve": cmd_evolve, "trajectories": cmd_trajectories, "second-order": cmd_second_order,
    "boost-audit": cmd_boost_audit, "frame-audit": cmd_frame_audit, "accel-audit": cmd_accel_audit,
    "equivalence-audit": cmd_equivalence_audit, "continuity-audit": cmd_continuity_audit,
    "ensemble": cmd_ensemble, "mass-audit": cmd_mass_audit,
}


def _versions() -> dict:
    def ver(name):
        try:
            return metadata.version(name)
        except metadata.PackageNotFoundError:
            return None
    return {"pwlab": ver("artifact"), "numpy": np.__version__, "python": platform.python_version()}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwlab", description="Pilot-wave dynamics laboratory")
    p.add_argument("command", choices=COMMANDS + ["schema"])
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a dotted config path (value parsed as JSON when possible)")
    p.add_argument("--out", help="output directory (default: runs/<command>-<timestamp>)")
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    p.add_argument("--seed", type=int, help="random seed override")
    return p


def run(command: str, config_path=None, overrides=(), out=None, threads: int = 1, seed=None) -> int:
    if command == "schema":
        print(json.dumps(SCHEMA, indent=2))
        return 0
    try:
        cfg = load_config(config_path, overrides, seed)
    except ConfigInvalid as exc:
        print(f"pwlab: {exc}", file=sys.stderr)
        return 2
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
    out_dir = Path(out) if out else Path("runs") / f"{command}-{stamp}"
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = Run(command, cfg, out_dir, max(1, threads))
    started = time.perf_counter()
    report = {"command": command, "config": cfg}
    code = 0
    try:
        report["results"] = HANDLERS[command](ctx)
        report["checks"] = ctx.checks
        report["passed"] = all(c["pass"] for c in ctx.checks)
        code = 0 if report["passed"] else 1
    except ConfigInvalid as exc:
        report["error"] = {"type": "ConfigInvalid", "message": str(exc)}
        report["passed"] = False
        code = 2
    except (PilotWaveError, ValueError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        report["checks"] = ctx.checks
        report["passed"] = False
        code = 1
    io.write_json(out_dir / "report.json", _jsonable(report))
    io.write_json(out_dir / "manifest.json", _jsonable({
        "command": command, "versions": _versions(), "resolved_config": cfg, "threads": ctx.workers,
        "wall_clock_seconds": time.perf_counter() - started, "started_at": stamp, "files": ["report.json"] + ctx.files,
    }))
    for c in ctx.checks:
        print(f"[{'PASS' if c['pass'] else 'FAIL'}] {c['name']}: {c['value']} {c['op']} {c['threshold']}")
    if "error" in report:
        print(f"pwlab: {report['error']['type']}: {report['error']['message']}", file=sys.stderr)
    print(f"pwlab: wrote {out_dir}")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.overrides, args.out, args.threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())
