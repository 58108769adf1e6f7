"""Run orchestration: simulate, sweep, convergence study, oracle check,
trend re-analysis.  Writes delimited output (CSV), rendered figures (PNG)
and a manifest with file checksums next to each other in the output
directory.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import time
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, merge_config
from .fem import Mesh1D, assemble_bilinear, assemble_mass
from .newmark import NewmarkParams, SolverState, run_simulation
from .observables import MomentRecorder, ObservableSeries
from .oracles import FourierGrid, constant_potential_propagate, one_way_carrier_packet
from .solvers import thomas_solve
from .trend import (SmoothingSpec, crossing_time, detect_post_impact_window,
                    kernel_smooth, linear_fit)
from .wavepacket import initial_displacement, initial_velocity
from . import plots

__all__ = ["CheckFailure", "TrendSummary", "SimResult", "simulate_run",
           "sweep_run", "convergence_run", "oracle_check_run", "trend_rerun",
           "analyze_series"]

OBSERVABLE_COLUMNS = ("t", "l2_sq", "mean", "variance", "sigma", "energy")


class CheckFailure(RuntimeError):
    """A quantitative check (oracle discrepancy threshold) failed."""


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return "nan"
    return f"{x:.17g}"


def _write_csv(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _time_tag(t: float) -> str:
    return f"{t:g}"


# ---------------------------------------------------------------------------
# problem assembly

def build_problem(cfg: RunConfig):
    """Mesh, matrices and initial data for a config.

    Returns (mesh, G, A, u0, v0, grid_ic) where grid_ic is the
    (FourierGrid, u0, v0) triple of the oracle-side initial data when one
    exists (constant-potential configurations), else None.
    """
    mesh = cfg.mesh()
    profile = cfg.potential_profile()
    G = assemble_mass(mesh)
    A = assemble_bilinear(mesh, cfg.raw["c"], profile)
    ini = cfg.raw["initial"]
    grid_ic = None
    if ini["kind"] == "packet":
        spec = cfg.packet_spec()
        if cfg.raw["ic_mode"] == "l2_project":
            u0 = _l2_project(mesh, G, lambda x: initial_displacement(spec, x))
            v0 = _l2_project(mesh, G, lambda x: initial_velocity(spec, x))
        else:
            u0 = initial_displacement(spec, mesh.nodes)
            v0 = initial_velocity(spec, mesh.nodes)
        if cfg.constant_m_sq() is not None:
            grid = FourierGrid.for_mesh(mesh)
            grid_ic = (grid, grid.sample(lambda x: initial_displacement(spec, x)),
                       grid.sample(lambda x: initial_velocity(spec, x)))
    else:  # narrowband (validated: constant potential)
        m_sq = cfg.constant_m_sq()
        span = cfg.raw["half_length"] * float(ini.get("span_factor", 5.0 / 3.0))
        grid = FourierGrid.for_mesh(mesh, half_span=span)
        u0g, v0g = one_way_carrier_packet(
            grid, carrier=float(ini["carrier"]), band_std=float(ini["band_std"]),
            center=float(ini.get("center", 0.0)), c=cfg.raw["c"], m_sq=m_sq,
            age=float(ini.get("age", 0.0)))
        u0 = grid.to_mesh(u0g, mesh)
        v0 = grid.to_mesh(v0g, mesh)
        grid_ic = (grid, u0g, v0g)
    return mesh, G, A, u0, v0, grid_ic


def _l2_project(mesh: Mesh1D, G, fn) -> np.ndarray:
    """Nodal coefficients of the L2 projection, rhs by 5-point Gauss per cell."""
    s, w = np.polynomial.legendre.leggauss(5)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w * mesh.h
    rhs = np.zeros(mesh.n_nodes)
    x_left = mesh.nodes[:-1]
    for sq, wq in zip(s, w):
        xq = x_left + mesh.h * sq
        fq = fn(xq)
        rhs[:-1] += wq * fq * (1.0 - sq)
        rhs[1:] += wq * fq * sq
    return thomas_solve(G, rhs)


class SnapshotRecorder:
    """Observer capturing the field at configured times."""

    def __init__(self, times, dt):
        self.steps = {int(round(t / dt)): t for t in times}
        self.fields = []

    def __call__(self, state: SolverState):
        if state.n in self.steps:
            self.fields.append((self.steps[state.n], state.u.copy()))


# ---------------------------------------------------------------------------
# trend analysis

@dataclass
class TrendSummary:
    window_lo: float
    window_hi: float
    mean_slope: float      # A
    mean_intercept: float  # B
    mean_r: float          # r
    sigma_slope: float     # A1
    sigma_intercept: float  # B1
    sigma_r: float         # r1
    t0: float | None
    sigma_min: float
    sigma_final: float
    delay: float | None

    def as_row(self):
        return [self.window_lo, self.window_hi, self.mean_slope, self.mean_intercept,
                self.mean_r, self.sigma_slope, self.sigma_intercept, self.sigma_r,
                self.t0, self.sigma_min, self.sigma_final, self.delay]


def _fit_window(cfg: RunConfig, t, sigma):
    fw = cfg.raw["fit_window"]
    if fw["mode"] == "explicit":
        return float(fw["t_lo"]), float(fw["t_hi"])
    if fw["mode"] == "full":
        return float(t[0]), float(t[-1])
    return detect_post_impact_window(t, sigma, cfg.detect_spec(),
                                     factor=float(fw["factor"]),
                                     pre_window=float(fw["pre_window"]),
                                     post_margin=float(fw["post_margin"]))


def _trimmed(t, window, bandwidth):
    """Shrink a fit window so smoothed values near the series ends, which
    carry Nadaraya-Watson boundary bias, stay out of the fit."""
    lo = max(window[0], float(t[0]) + bandwidth)
    hi = min(window[1], float(t[-1]) - bandwidth)
    if hi <= lo or np.count_nonzero((t >= lo) & (t <= hi)) < 4:
        return window
    return lo, hi


def analyze_series(cfg: RunConfig, series: ObservableSeries) -> TrendSummary:
    """Windowed line fits of the smoothed mean and sigma plus diagnostics."""
    t = series.t
    mean = series.mean
    sigma = series.sigma
    spec = cfg.smoothing_spec()
    window = _fit_window(cfg, t, sigma)
    fit_win = _trimmed(t, window, spec.bandwidth)
    mean_s = kernel_smooth(t, mean, spec)
    sigma_s = kernel_smooth(t, sigma, spec)
    fit_m = linear_fit(t, mean_s, window=fit_win)
    fit_s = linear_fit(t, sigma_s, window=fit_win)
    t0 = crossing_time(t, mean, 0.0)

    delay = None
    pre_hi = t[0] + float(cfg.raw["fit_window"]["pre_window"])
    if np.count_nonzero(t <= pre_hi) >= 2:
        pre = linear_fit(t, mean, window=(float(t[0]), float(pre_hi)))
        if abs(pre.slope - fit_m.slope) > 1e-12 and abs(pre.slope) > 1e-12:
            t_apex = (fit_m.intercept - pre.intercept) / (pre.slope - fit_m.slope)
            t_wall = -pre.intercept / pre.slope
            delay = t_apex - t_wall
    return TrendSummary(window[0], window[1], fit_m.slope, fit_m.intercept, fit_m.r,
                        fit_s.slope, fit_s.intercept, fit_s.r, t0,
                        float(np.min(sigma)), float(sigma[-1]), delay)


# ---------------------------------------------------------------------------
# simulate

@dataclass
class SimResult:
    out_dir: Path
    series: ObservableSeries
    final_state: SolverState
    summary: TrendSummary
    warnings: list


def _manifest(out_dir: Path, cfg: RunConfig, duration: float, warnings, extra=None):
    files = {p.name: _sha256(p) for p in sorted(out_dir.iterdir())
             if p.is_file() and p.name != "manifest.json"}
    doc = {"kind": "kgsim-run-manifest", "version": __version__,
           "config": cfg.to_dict(), "duration_sec": duration,
           "warnings": warnings, "files": files}
    if extra:
        doc.update(extra)
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def simulate_run(cfg: RunConfig, out_dir, make_figures: bool = True) -> SimResult:
    """Run one simulation; write observables.csv, snapshots, figures, manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    mesh, G, A, u0, v0, _ = build_problem(cfg)
    params = NewmarkParams(dt=cfg.raw["dt"], n_steps=cfg.n_steps,
                           beta=cfg.raw["beta"], gamma=cfg.raw["gamma"])
    recorder = MomentRecorder(mesh, G, A, cfg.raw["stride"], cfg.n_steps)
    snaps = SnapshotRecorder([t for t in cfg.raw["snapshot_times"]
                              if t <= cfg.raw["t_final"]], cfg.raw["dt"])
    final = run_simulation(G, A, u0, v0, params, cfg.cg_options(),
                           observers=[recorder, snaps], solver=cfg.raw["solver"])
    series = recorder.series

    warnings = []
    if series.leaked:
        warnings.append(
            f"boundary-adjacent density reached {series.max_edge_fraction:.3e} of the mass "
            f"at t = {series.leak_time:g}; reflections from the exterior nodes may pollute the run")

    _write_csv(out_dir / "observables.csv", OBSERVABLE_COLUMNS,
               ([getattr(r, c) for c in OBSERVABLE_COLUMNS] for r in series.records))
    for t_snap, field in snaps.fields:
        _write_csv(out_dir / f"snapshot_t{_time_tag(t_snap)}.csv", ("x", "u"),
                   zip(mesh.nodes, field))

    summary = analyze_series(cfg, series)
    with open(out_dir / "trend.json", "w") as fh:
        json.dump(asdict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")

    if make_figures:
        spec = cfg.smoothing_spec()
        plots.plot_observables(series, summary, spec, out_dir / "fig_observables.png")
        if snaps.fields:
            plots.plot_snapshots(mesh, snaps.fields, cfg.potential_profile(),
                                 out_dir / "fig_snapshots.png")
    _manifest(out_dir, cfg, time.time() - started, warnings,
              extra={"trend": asdict(summary)})
    return SimResult(out_dir, series, final, summary, warnings)


# ---------------------------------------------------------------------------
# sweep

SWEEP_COLUMNS = ("a2", "A", "B", "r", "A1", "B1", "r1", "t0",
                 "sigma_min", "sigma_final", "delay", "window_lo", "window_hi",
                 "status")


def _sweep_one(args):
    base_dict, a2, run_dir = args
    sub = merge_config(base_dict, {"potential": {"a2": a2},
                                   "label": f"a2_{_time_tag(a2)}"})
    cfg = RunConfig.from_dict(sub)
    result = simulate_run(cfg, run_dir)
    s = result.summary
    return [a2, s.mean_slope, s.mean_intercept, s.mean_r, s.sigma_slope,
            s.sigma_intercept, s.sigma_r, s.t0, s.sigma_min, s.sigma_final,
            s.delay, s.window_lo, s.window_hi, "ok"]


def sweep_run(base: RunConfig, a2_list, out_dir, jobs: int = 1):
    """One simulation per barrier height; assemble table.csv and a figure.

    Failures are isolated per run: a failed row is marked and the other
    heights still complete.
    """
    if base.raw["potential"]["kind"] != "step":
        raise ConfigError("sweep varies potential.a2 and needs a step potential")
    if not a2_list:
        raise ConfigError("sweep needs a nonempty a2 list")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    tasks = [(base.to_dict(), a2, out_dir / f"a2_{_time_tag(a2)}") for a2 in a2_list]
    rows = []
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sweep_one, task) for task in tasks]
            for a2, fut in zip(a2_list, futures):
                try:
                    rows.append(fut.result())
                except Exception as exc:  # isolate the failed height
                    rows.append([a2] + [None] * (len(SWEEP_COLUMNS) - 2) + [f"failed: {exc}"])
    else:
        for task in tasks:
            try:
                rows.append(_sweep_one(task))
            except Exception as exc:
                rows.append([task[1]] + [None] * (len(SWEEP_COLUMNS) - 2) + [f"failed: {exc}"])

    with open(out_dir / "table.csv", "w") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")
    plots.plot_sweep(rows, out_dir / "fig_sweep.png")
    _manifest(out_dir, base, time.time() - started, [],
              extra={"sweep_a2": list(a2_list)})
    return rows


# ---------------------------------------------------------------------------
# oracle reference fields

def _oracle_reference(cfg: RunConfig, mesh: Mesh1D, grid_ic, t: float) -> np.ndarray:
    grid, u0g, v0g = grid_ic
    m_sq = cfg.constant_m_sq()
    field = constant_potential_propagate(grid, u0g, m_sq, cfg.raw["c"], t, v0g)
    return grid.to_mesh(field, mesh)


def _l2_rel(mesh: Mesh1D, approx: np.ndarray, ref: np.ndarray) -> float:
    diff = approx - ref
    num = np.trapezoid(diff * diff, mesh.nodes)
    den = np.trapezoid(ref * ref, mesh.nodes)
    return float(np.sqrt(num / den))


# ---------------------------------------------------------------------------
# convergence

def convergence_run(base: RunConfig, dt_list=None, h_list=None, out_dir="."):
    """Error against the spectral reference under dt or h refinement."""
    if (dt_list is None) == (h_list is None):
        raise ConfigError("convergence needs exactly one of dt_list or h_list")
    if base.constant_m_sq() is None:
        raise ConfigError("convergence study needs a constant potential (spectral reference)")
    values = dt_list if dt_list is not None else h_list
    if len(values) < 3:
        raise ConfigError("need at least 3 refinement levels")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    kind = "dt" if dt_list is not None else "h"
    T = base.raw["t_final"]
    L = base.raw["half_length"]

    rows = []
    for value in values:
        overrides = {}
        if kind == "dt":
            overrides["dt"] = value
        else:
            m = int(round(2.0 * L / value))
            m += m % 2
            overrides["n_cells"] = m
        cfg = RunConfig.from_dict(merge_config(base.to_dict(), overrides))
        mesh, G, A, u0, v0, grid_ic = build_problem(cfg)
        params = NewmarkParams(dt=cfg.raw["dt"], n_steps=cfg.n_steps,
                               beta=cfg.raw["beta"], gamma=cfg.raw["gamma"])
        state = run_simulation(G, A, u0, v0, params, cfg.cg_options(),
                               solver=cfg.raw["solver"])
        ref = _oracle_reference(cfg, mesh, grid_ic, T)
        err = _l2_rel(mesh, state.u, ref)
        actual = cfg.raw["dt"] if kind == "dt" else mesh.h
        rows.append((kind, actual, cfg.raw["n_cells"], cfg.raw["dt"], err))
        print(f"  {kind} = {actual:g}: relative L2 error = {err:.6e}")

    params_log = np.log([r[1] for r in rows])
    errs_log = np.log([r[4] for r in rows])
    order = float(np.polyfit(params_log, errs_log, 1)[0])
    print(f"observed order in {kind}: {order:.3f}")

    _write_csv(out_dir / "convergence.csv",
               ("kind", kind, "n_cells", "dt", "l2_error"), rows)
    plots.plot_convergence(rows, order, out_dir / "fig_convergence.png")
    _manifest(out_dir, base, time.time() - started, [],
              extra={"observed_order": order, "refine": kind})
    return rows, order


# ---------------------------------------------------------------------------
# oracle check

def oracle_check_run(cfg: RunConfig, out_dir="."):
    """L2 discrepancy of the FEM field against the spectral reference over time."""
    if cfg.constant_m_sq() is None:
        raise ConfigError("no oracle for step potential: oracle-check needs a constant potential")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    mesh, G, A, u0, v0, grid_ic = build_problem(cfg)
    times = cfg.raw["oracle_check"]["times"]
    if times is None:
        n_checks = 8
        times = [cfg.raw["t_final"] * (k + 1) / n_checks for k in range(n_checks)]
    times = [round(t / cfg.raw["dt"]) * cfg.raw["dt"] for t in times]
    snaps = SnapshotRecorder(times, cfg.raw["dt"])
    params = NewmarkParams(dt=cfg.raw["dt"], n_steps=cfg.n_steps,
                           beta=cfg.raw["beta"], gamma=cfg.raw["gamma"])
    run_simulation(G, A, u0, v0, params, cfg.cg_options(),
                   observers=[snaps], solver=cfg.raw["solver"])

    rows = []
    for t_snap, field in snaps.fields:
        ref = _oracle_reference(cfg, mesh, grid_ic, t_snap)
        rows.append((t_snap, _l2_rel(mesh, field, ref)))
        print(f"  t = {t_snap:g}: relative L2 discrepancy = {rows[-1][1]:.6e}")

    threshold = float(cfg.raw["oracle_check"]["threshold"])
    _write_csv(out_dir / "oracle_check.csv", ("t", "l2_error"), rows)
    plots.plot_oracle(rows, threshold, out_dir / "fig_oracle.png")
    final_err = rows[-1][1]
    status = "pass" if final_err <= threshold else "fail"
    print(f"final-time discrepancy {final_err:.3e} vs threshold {threshold:g}: {status}")
    _manifest(out_dir, cfg, time.time() - started, [],
              extra={"oracle_errors": [list(r) for r in rows],
                     "threshold": threshold, "status": status})
    if status == "fail":
        raise CheckFailure(
            f"oracle discrepancy {final_err:.3e} exceeds threshold {threshold:g}")
    return rows


# ---------------------------------------------------------------------------
# trend re-analysis of an existing observables.csv

def read_observables(path) -> dict:
    data = np.genfromtxt(path, delimiter=",", names=True)
    missing = [c for c in OBSERVABLE_COLUMNS if c not in (data.dtype.names or ())]
    if missing:
        raise ConfigError(f"{path}: missing columns {missing}")
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def trend_rerun(observables_path, cfg: RunConfig, out_dir="."):
    """Re-run smoothing/window/fits on a stored observables.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cols = read_observables(observables_path)
    t = cols["t"]
    series = ObservableSeries(stride=1)

    class _Row:
        pass

    for i in range(len(t)):
        rec = _Row()
        for name in OBSERVABLE_COLUMNS:
            setattr(rec, name, float(cols[name][i]))
        series.records.append(rec)

    summary = analyze_series(cfg, series)
    spec = cfg.smoothing_spec()
    smooth_rows = zip(t, kernel_smooth(t, cols["mean"], spec),
                      kernel_smooth(t, cols["sigma"], spec))
    _write_csv(out_dir / "trend_smoothed.csv", ("t", "mean_smooth", "sigma_smooth"),
               smooth_rows)
    with open(out_dir / "trend.json", "w") as fh:
        json.dump(asdict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    plots.plot_observables(series, summary, spec, out_dir / "fig_trend.png")
    print(f"mean:  A = {summary.mean_slope:.6g}  B = {summary.mean_intercept:.6g}  "
          f"r = {summary.mean_r:.6g}")
    print(f"sigma: A1 = {summary.sigma_slope:.6g}  B1 = {summary.sigma_intercept:.6g}  "
          f"r1 = {summary.sigma_r:.6g}")
    print(f"window [{summary.window_lo:g}, {summary.window_hi:g}]  t0 = {summary.t0}")
    return summary
