"""Seeded experiment runner: Monte-Carlo sweeps, CSV emission, verification.

A run is a grid of (sweep point, trial). Each trial drops users, groups
them, assigns antennas, optimizes every group, and reports both the
optimized statistical bound and a Monte-Carlo estimate of the ergodic sum
rate (which the bound should dominate on average). All randomness derives
from the master seed through a fixed counter scheme, so a (config, seed)
pair determines every emitted byte; trial wall-clock times are kept on the
in-memory records only, precisely to preserve that guarantee.
"""

import concurrent.futures
import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from .baselines import random_assignment, random_grouping
from .beamforming import compose_cascade
from .channel import draw_channels, sample_scenario
from .config import ScenarioConfig
from .optimizer import alternating_optimize
from .propagation import build_propagation
from .scheduler import AntennaAssignment, greedy_grouping, select_antennas

__all__ = [
    "TrialRecord",
    "ExperimentResult",
    "evaluate_ergodic_rate",
    "run_experiment",
    "emit_outputs",
    "aggregate_rows",
    "read_raw_csv",
    "verify_outputs",
    "RAW_COLUMNS",
    "AGGREGATE_COLUMNS",
]

RAW_COLUMNS = (
    "sweep_value",
    "trial",
    "seed",
    "objective_bound",
    "ergodic_rate_mc",
    "stderr",
    "iterations",
)
AGGREGATE_COLUMNS = (
    "sweep_value",
    "n_trials",
    "objective_mean",
    "objective_ci95_lo",
    "objective_ci95_hi",
    "ergodic_mean",
    "ergodic_ci95_lo",
    "ergodic_ci95_hi",
)


@dataclass
class TrialRecord:
    """One (sweep point, trial) outcome; group_records holds the per-group
    assignment metadata and optimizer traces."""

    sweep_value: float
    trial: int
    seed: int
    objective_bound: float
    ergodic_rate_mc: float
    stderr: float
    iterations: int
    wallclock_ms: int = 0
    group_records: list = field(default_factory=list)


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    rows: list  # TrialRecord, sorted by (point index, trial)
    sweep_axis: str
    sweep_values: tuple


def evaluate_ergodic_rate(phases, power, stats, prop, assignment, draws, seed):
    """Monte-Carlo ergodic sum rate under instantaneous fading.

    Averages the instantaneous sum rate over ``draws`` independent channel
    realizations; returns (mean, standard error). Deterministic per seed.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    cascade = compose_cascade(phases, prop)
    v = cascade.G @ prop.antenna_to_first[:, np.asarray(assignment.antennas, int)]
    p = power.p
    noise = stats.noise_power
    rng = np.random.default_rng(seed)
    rates = np.empty(draws)
    for i in range(draws):
        h = draw_channels(stats, rng).h
        received = np.abs(h.conj() @ v) ** 2 * p[None, :]
        signal = np.diag(received)
        interference = received.sum(axis=1) - signal
        rates[i] = np.sum(np.log2(1.0 + signal / (interference + noise)))
    mean = float(rates.mean())
    stderr = float(rates.std(ddof=1) / np.sqrt(draws)) if draws > 1 else 0.0
    return mean, stderr


def _trial_seed_table(master_seed, num_points, num_trials):
    state = np.random.SeedSequence(master_seed).generate_state(
        num_points * num_trials, dtype=np.uint64
    )
    return state.reshape(num_points, num_trials)


def _sub_seeds(trial_seed, num_groups):
    """Per-trial child seeds: [scenario, grouping, then (selection, ao, mc)
    per group]."""
    return np.random.SeedSequence(int(trial_seed)).generate_state(
        2 + 3 * num_groups, dtype=np.uint64
    )


def _run_trial(cfg, geometry, prop, sweep_value, trial, trial_seed):
    started = time.perf_counter()
    num_groups = -(-cfg.total_users // cfg.users_per_group)
    seeds = _sub_seeds(trial_seed, num_groups)

    _, stats = sample_scenario(
        int(seeds[0]), cfg.total_users, geometry, **cfg.scenario_kwargs()
    )
    if cfg.grouping_method == "greedy":
        plan = greedy_grouping(stats, cfg.users_per_group)
    else:
        plan = random_grouping(cfg.total_users, cfg.users_per_group, int(seeds[1]))

    settings = cfg.ao_settings()
    total_power = cfg.total_power_watts
    bounds, means, variances, iterations = [], [], [], 0
    group_records = []
    for g, group in enumerate(plan.groups):
        sel_seed, ao_seed, mc_seed = (int(s) for s in seeds[2 + 3 * g : 5 + 3 * g])
        if cfg.selection_method == "leakage":
            assignment = select_antennas(stats, prop, group, cfg.selection_draws, sel_seed)
        elif cfg.selection_method == "random":
            assignment = random_assignment(group, cfg.num_antennas, sel_seed)
        else:
            assignment = AntennaAssignment(users=group, antennas=np.arange(len(group)))

        sub = stats.select(group)
        result = alternating_optimize(
            sub, prop, assignment, total_power, settings, ao_seed
        )
        erg_mean, erg_se = evaluate_ergodic_rate(
            result.phases, result.power, sub, prop, assignment, cfg.mc_draws, mc_seed
        )
        bounds.append(result.rbar)
        means.append(erg_mean)
        variances.append(erg_se**2)
        iterations += result.outer_iterations
        group_records.append(
            {
                "users": np.asarray(group, int),
                "antennas": assignment.antennas,
                "total_leakage": assignment.total_leakage,
                "objective_bound": result.rbar,
                "ergodic_rate_mc": erg_mean,
                "stderr": erg_se,
                "iterations": result.outer_iterations,
                "trace_power": result.trace_power,
                "trace_phase": result.trace_phase,
            }
        )

    n_groups = len(plan.groups)
    return TrialRecord(
        sweep_value=float(sweep_value),
        trial=trial,
        seed=int(trial_seed),
        objective_bound=float(np.mean(bounds)),
        ergodic_rate_mc=float(np.mean(means)),
        stderr=float(np.sqrt(np.sum(variances)) / n_groups),
        iterations=iterations,
        wallclock_ms=int(round((time.perf_counter() - started) * 1000.0)),
        group_records=group_records,
    )


def run_experiment(config, threads=1):
    """Run every (sweep point, trial) cell and return the sorted records.

    Per-trial seeds come from a SeedSequence over the master seed, indexed
    by (point, trial), so results do not depend on scheduling; trials may
    run on several threads.
    """
    config.validate()
    if config.sweep_axis == "none":
        points = [(0.0, config)]
    else:
        points = [
            (v, config.with_value(config.sweep_axis, v)) for v in config.sweep_values
        ]
    seed_table = _trial_seed_table(config.master_seed, len(points), config.trials)

    prepared = []
    for value, cfg in points:
        geometry = cfg.geometry()
        prepared.append((value, cfg, geometry, build_propagation(geometry)))

    jobs = [
        (pi, ti)
        for pi in range(len(points))
        for ti in range(config.trials)
    ]

    def run(job):
        pi, ti = job
        value, cfg, geometry, prop = prepared[pi]
        return job, _run_trial(cfg, geometry, prop, value, ti, seed_table[pi, ti])

    results = {}
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            for job, record in pool.map(run, jobs):
                results[job] = record
    else:
        for job in jobs:
            results[job] = run(job)[1]

    rows = [results[job] for job in sorted(results)]
    return ExperimentResult(
        config=config,
        rows=rows,
        sweep_axis=config.sweep_axis,
        sweep_values=tuple(v for v, _ in points),
    )


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def aggregate_rows(rows):
    """Per-sweep-value mean and 95% confidence interval of both rate columns.

    Values appear in first-occurrence order. Single-trial points collapse
    the interval onto the mean.
    """
    order, buckets = [], {}
    for row in rows:
        key = row["sweep_value"] if isinstance(row, dict) else row.sweep_value
        if key not in buckets:
            order.append(key)
            buckets[key] = []
        buckets[key].append(row)

    def column(bucket, name):
        return np.array(
            [r[name] if isinstance(r, dict) else getattr(r, name) for r in bucket]
        )

    aggregates = []
    for key in order:
        bucket = buckets[key]
        n = len(bucket)
        entry = {"sweep_value": key, "n_trials": n}
        for prefix, name in (("objective", "objective_bound"), ("ergodic", "ergodic_rate_mc")):
            values = column(bucket, name)
            mean = float(values.mean())
            if n > 1:
                half = float(
                    sstats.t.ppf(0.975, n - 1) * values.std(ddof=1) / np.sqrt(n)
                )
            else:
                half = 0.0
            entry[f"{prefix}_mean"] = mean
            entry[f"{prefix}_ci95_lo"] = mean - half
            entry[f"{prefix}_ci95_hi"] = mean + half
        aggregates.append(entry)
    return aggregates


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit_outputs(result, out_dir):
    """Write raw.csv, aggregate.csv and summary.txt; returns their paths.

    Output is a pure function of (config, seed): stable row order, repr
    float formatting, LF newlines, no timestamps.
    """
    os.makedirs(out_dir, exist_ok=True)
    raw_path = os.path.join(out_dir, "raw.csv")
    _write_csv(
        raw_path,
        RAW_COLUMNS,
        [
            [
                _fmt(r.sweep_value),
                _fmt(r.trial),
                _fmt(r.seed),
                _fmt(r.objective_bound),
                _fmt(r.ergodic_rate_mc),
                _fmt(r.stderr),
                _fmt(r.iterations),
            ]
            for r in result.rows
        ],
    )

    aggregates = aggregate_rows(result.rows)
    agg_path = os.path.join(out_dir, "aggregate.csv")
    _write_csv(
        agg_path,
        AGGREGATE_COLUMNS,
        [[_fmt(a[c]) for c in AGGREGATE_COLUMNS] for a in aggregates],
    )

    summary_path = os.path.join(out_dir, "summary.txt")
    lines = ["simbeam experiment summary", ""]
    lines.append(f"sweep axis: {result.sweep_axis}")
    lines.append(f"trials per point: {result.config.trials}")
    lines.append(f"master seed: {result.config.master_seed}")
    lines.append("")
    header = (
        f"{'sweep_value':>12}  {'n':>4}  {'bound mean':>12}  {'bound 95% CI':>28}  "
        f"{'MC rate mean':>12}"
    )
    lines.append(header)
    for a in aggregates:
        ci = f"[{a['objective_ci95_lo']:.4f}, {a['objective_ci95_hi']:.4f}]"
        lines.append(
            f"{a['sweep_value']:>12.4g}  {a['n_trials']:>4d}  "
            f"{a['objective_mean']:>12.4f}  {ci:>28}  {a['ergodic_mean']:>12.4f}"
        )
    lines.append("")
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines))
    return {"raw": raw_path, "aggregate": agg_path, "summary": summary_path}


def read_raw_csv(path):
    """Parse raw.csv back into a list of per-trial dicts."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RAW_COLUMNS:
            raise ValueError(f"unexpected raw CSV header in {path}")
        for rec in reader:
            rows.append(
                {
                    "sweep_value": float(rec["sweep_value"]),
                    "trial": int(rec["trial"]),
                    "seed": int(rec["seed"]),
                    "objective_bound": float(rec["objective_bound"]),
                    "ergodic_rate_mc": float(rec["ergodic_rate_mc"]),
                    "stderr": float(rec["stderr"]),
                    "iterations": int(rec["iterations"]),
                }
            )
    return rows


def verify_outputs(out_dir, rtol=1e-9):
    """Recompute aggregate.csv from raw.csv and compare.

    Returns (ok, message). Float repr in the CSVs round-trips exactly, so
    honest files match far inside the tolerance.
    """
    raw_rows = read_raw_csv(os.path.join(out_dir, "raw.csv"))
    expected = aggregate_rows(raw_rows)

    agg_path = os.path.join(out_dir, "aggregate.csv")
    with open(agg_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != AGGREGATE_COLUMNS:
            return False, f"unexpected aggregate CSV header in {agg_path}"
        actual = list(reader)

    if len(actual) != len(expected):
        return False, (
            f"aggregate.csv has {len(actual)} rows, raw.csv implies {len(expected)}"
        )
    for i, (exp, act) in enumerate(zip(expected, actual)):
        for col in AGGREGATE_COLUMNS:
            want = float(exp[col])
            got = float(act[col])
            if not np.isclose(got, want, rtol=rtol, atol=1e-300):
                return False, (
                    f"aggregate.csv row {i} column {col}: {got!r} != "
                    f"recomputed {want!r}"
                )
    return True, f"aggregate.csv consistent with raw.csv ({len(expected)} rows)"
