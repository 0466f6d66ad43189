"""Experiment runners that write CSV data for training runs, sweeps and
phase-space snapshots. Everything is a pure function of the config and seed.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, dump_config, gear_table
from .dynamics import NoiseParams, PulseSchedule, evolve_sequence
from .ga import GAResult, run_ga
from .phase_space import SphereGrid, husimi_q, wigner_function
from .spin_core import build_spin_operators, coherent_spin_state
from .stats import generation_stats, kde

log = logging.getLogger(__name__)

KDE_POINTS = 128


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_resolved_config(config: ExperimentConfig, out: Path) -> None:
    (out / "config.resolved.yaml").write_text(dump_config(config))


def cell_seed(seed: int, *key: int) -> int:
    """Deterministic 63-bit sub-seed for one (sweep value, repetition) cell."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


# ---------------------------------------------------------------- train

def run_train(config: ExperimentConfig) -> GAResult:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(config, out)
    ga = config.ga
    result = run_ga(ga, workers=config.workers)
    recorded = set(config.recorded_generations())

    rows = []
    for r in result.records:
        xs = generation_stats(r.final_xi)
        rows.append((r.index, r.best_performance, r.mean_performance, r.median_performance,
                     r.best_final_xi, xs.mean, xs.median, r.floored_samples))
    write_csv(out / "generations.csv",
              ["generation", "best_R", "mean_R", "median_R",
               "best_xi_final", "mean_xi_final", "median_xi_final", "floored_samples"], rows)

    times = ga.t_total / ga.m * np.arange(ga.m + 1)
    write_csv(out / "trajectories.csv", ["generation", "time", "xi_z"],
              ((r.index, t, x) for r in result.records if r.index in recorded
               for t, x in zip(times, r.best_xi_samples)))

    write_csv(out / "population_xi.csv", ["generation", "individual", "xi_final"],
              ((r.index, i, x) for r in result.records for i, x in enumerate(r.final_xi)))

    everything = np.concatenate([r.final_xi for r in result.records])
    grid = np.linspace(everything.min() - 0.1, everything.max() + 0.1, KDE_POINTS)
    kde_rows = []
    for r in result.records:
        if r.index in recorded:
            est = kde(r.final_xi, "auto", grid)
            kde_rows.extend((r.index, x, d) for x, d in zip(est.grid, est.density))
    write_csv(out / "kde.csv", ["generation", "xi_final", "density"], kde_rows)

    write_sequence(out / "best_sequence.csv", result.best.genes, ga.levels, ga.t_total)

    report = {
        "best_xi_final": float(result.best.final_xi),
        "best_performance": float(result.best.performance),
        "generations": len(result.records),
        "floored_samples": int(sum(r.floored_samples for r in result.records)),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return result


def write_sequence(path: Path, genes, levels, t_total: float) -> None:
    dt = t_total / len(genes)
    write_csv(path, ["segment_index", "t_start", "omega"],
              ((k, k * dt, levels[g]) for k, g in enumerate(genes)))


def read_sequence(path) -> list[float]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and "omega" not in rows[0]:
        raise ConfigError(f"{path}: missing 'omega' column")
    rows.sort(key=lambda r: int(r["segment_index"]))
    return [float(r["omega"]) for r in rows]


# ---------------------------------------------------------------- sweeps

def sweep_cell_config(config: ExperimentConfig, value):
    """GAConfig for one sweep value."""
    ga = config.ga
    if config.kind == "sweep-pulses":
        return dataclasses.replace(ga, m=int(value))
    if config.kind == "sweep-gears":
        return dataclasses.replace(ga, levels=gear_table(value))
    if config.kind == "sweep-size":
        return dataclasses.replace(ga, n_spins=int(value))
    if config.kind == "sweep-thermal":
        noise = NoiseParams(ga.noise.gamma, ga.noise.gamma_z, float(value))
        return dataclasses.replace(ga, noise=noise)
    raise ConfigError(f"{config.kind} is not a sweep")


def _value_label(value) -> str:
    if isinstance(value, (list, tuple)):
        return "|".join(fmt(float(v)) for v in value)
    return fmt(value)


def _run_cell(args):
    ga_cfg, recorded = args
    res = run_ga(ga_cfg)
    traces = {r.index: r.best_xi_samples for r in res.records if r.index in recorded}
    return traces, float(res.best.final_xi)


def run_sweep(config: ExperimentConfig) -> dict:
    """Returns {value label: array of final best xi per repetition}."""
    if config.kind not in ("sweep-pulses", "sweep-gears", "sweep-size", "sweep-thermal"):
        raise ConfigError(f"run_sweep needs a sweep kind, got {config.kind!r}")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(config, out)
    recorded = set(config.recorded_generations())

    jobs = []
    for vi, value in enumerate(config.sweep_values):
        base = sweep_cell_config(config, value)
        for rep in range(config.repetitions):
            # same sub-seed for every value: repetitions are paired across the sweep
            cfg = dataclasses.replace(base, seed=cell_seed(config.ga.seed, rep))
            jobs.append((vi, value, rep, cfg))

    payload = [(cfg, recorded) for _, _, _, cfg in jobs]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_cell, payload))
    else:
        results = [_run_cell(p) for p in payload]

    trace_rows, agg_rows, summary_rows = [], [], []
    finals = {}
    for vi, value in enumerate(config.sweep_values):
        label = _value_label(value)
        cells = [(job, res) for job, res in zip(jobs, results) if job[0] == vi]
        ga_cfg = cells[0][0][3]
        times = ga_cfg.t_total / ga_cfg.m * np.arange(ga_cfg.m + 1)
        for (_, _, rep, _), (traces, _) in cells:
            for gen in sorted(traces):
                trace_rows.extend((label, rep, gen, t, x) for t, x in zip(times, traces[gen]))
        for gen in sorted(recorded):
            stack = np.array([traces[gen] for _, (traces, _) in cells])
            mean, var = stack.mean(axis=0), stack.var(axis=0)
            agg_rows.extend((label, gen, t, mu, v) for t, mu, v in zip(times, mean, var))
        f = np.array([res[1] for _, res in cells])
        finals[label] = f
        summary_rows.append((label, len(f), f.mean(), f.var(), f.min(), f.max()))

    write_csv(out / "traces.csv", ["value", "repetition", "generation", "time", "xi_z"], trace_rows)
    write_csv(out / "aggregate.csv", ["value", "generation", "time", "mean_xi_z", "var_xi_z"],
              agg_rows)
    write_csv(out / "summary.csv",
              ["value", "repetitions", "mean_xi_final", "var_xi_final", "min_xi_final",
               "max_xi_final"], summary_rows)
    return finals


# ---------------------------------------------------------------- phase space

def resolve_sequence(config: ExperimentConfig) -> list[float]:
    ps = config.phase_space
    if ps.sequence is not None:
        return [float(x) for x in ps.sequence]
    if ps.sequence_file is not None:
        path = Path(ps.sequence_file)
        if not path.exists():
            raise ConfigError(f"sequence file {path} does not exist")
        return read_sequence(path)
    raise ConfigError("phase-space needs phase_space.sequence or phase_space.sequence_file")


def run_phase_space(config: ExperimentConfig) -> list[dict]:
    """Husimi and Wigner fields of the initial CSS and of the state at each requested time."""
    omegas = resolve_sequence(config)
    ga = config.ga
    ps = config.phase_space
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(config, out)

    ops = build_spin_operators(ga.n_spins)
    rho0 = coherent_spin_state(ops, np.pi / 2, 0.0)
    grid = SphereGrid(ps.n_theta, ps.n_phi)
    states = [rho0]
    dt = None
    if omegas:
        levels = sorted(set(omegas), reverse=True)
        sched = PulseSchedule(ga.t_total, levels, [levels.index(w) for w in omegas])
        traj = evolve_sequence(rho0, sched, ops, ga.kappa, ga.noise, ga.substeps)
        states = traj.states
        dt = sched.dt

    indices = [0]
    if dt is not None:
        times = ps.sample_times if ps.sample_times is not None else [ga.t_total]
        for t in times:
            k = int(round(float(t) / dt))
            if not 0 <= k <= len(omegas):
                raise ConfigError(f"sample time {t} outside [0, {ga.t_total}]")
            if k not in indices:
                indices.append(k)

    frames = []
    for frame, k in enumerate(indices):
        rho = states[k]
        q = husimi_q(rho, ops, grid)
        w = wigner_function(rho, ops, grid)
        hname, wname = f"husimi_{frame:04d}.csv", f"wigner_{frame:04d}.csv"
        write_csv(out / hname, ["theta", "phi", "value"], q.rows())
        write_csv(out / wname, ["theta", "phi", "value"], w.rows())
        frames.append({"frame": frame, "segment_index": k,
                       "time": 0.0 if dt is None else k * dt,
                       "husimi_file": hname, "wigner_file": wname,
                       "wigner_min": float(w.values.min()),
                       "husimi_max": float(q.values.max())})
    write_csv(out / "frames.csv", list(frames[0].keys()), (f.values() for f in frames))
    return frames
