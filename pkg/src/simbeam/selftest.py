"""Built-in invariant battery behind the ``selftest`` CLI subcommand.

A fast, dependency-free subset of the test suite's invariants, runnable in
any deployment to confirm the numerics are healthy. Each check returns
(name, ok, detail); everything is seeded and finishes in a few seconds.
"""

import numpy as np

from .baselines import zf_precoder
from .beamforming import PhaseConfig, compose_cascade, wrap_phases
from .channel import ChannelStats, draw_channels, steering_vector
from .optimizer import (
    PowerAllocation,
    gradient_theta,
    objective,
    objective_context,
    waterfill_step,
)
from .propagation import SimGeometry, build_propagation, rs_coefficient
from .scheduler import greedy_grouping, hungarian_assign

__all__ = ["run_selftest", "synthetic_stats"]


def synthetic_stats(rng, num_users, num_atoms):
    """Unit-scale random statistical CSI for optimizer checks."""
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(num_users, num_atoms))
    return ChannelStats(
        beta=rng.uniform(0.5, 2.0, num_users),
        kappa=rng.uniform(1.0, 30.0, num_users),
        h_los=np.exp(1j * phases),
        noise_power=rng.uniform(0.5, 2.0, num_users),
    )


def _tiny_setup(seed, num_atoms=9, num_layers=2, num_users=2):
    rng = np.random.default_rng(seed)
    geometry = SimGeometry(
        wavelength=0.075,
        num_layers=num_layers,
        atoms_per_layer=num_atoms,
        num_antennas=4,
    )
    prop = build_propagation(geometry)
    # Rescale the transfer model to O(1) so unit-scale noise gives sane SINR.
    scale = 1.0 / np.abs(prop.antenna_to_first).mean()
    prop.antenna_to_first = prop.antenna_to_first * scale
    prop.inter_layer = [w / np.abs(w).mean() for w in prop.inter_layer]
    stats = synthetic_stats(rng, num_users, num_atoms)
    phases = PhaseConfig.random(num_atoms, num_layers, rng)
    antennas = np.arange(num_users)
    power = PowerAllocation.uniform(4.0, num_users)
    return geometry, prop, stats, phases, antennas, power


def _fd_gradient(phases, stats, prop, antennas, power, step=1e-6):
    theta = phases.theta
    grad = np.zeros_like(theta)
    for n in range(theta.shape[0]):
        for l in range(theta.shape[1]):
            for sign in (1.0, -1.0):
                shifted = theta.copy()
                shifted[n, l] += sign * step
                cascade = compose_cascade(PhaseConfig(shifted), prop)
                ctx = objective_context(stats, cascade, prop, antennas)
                grad[n, l] += sign * objective(ctx, power)
    return grad / (2.0 * step)


def _check_gradient():
    worst = 0.0
    for seed in (1, 2):
        _, prop, stats, phases, antennas, power = _tiny_setup(seed)
        cascade = compose_cascade(phases, prop)
        analytic = gradient_theta(stats, cascade, prop, antennas, power)
        numeric = _fd_gradient(phases, stats, prop, antennas, power)
        denom = np.maximum(np.abs(numeric), 1e-9 * np.abs(numeric).max())
        worst = max(worst, float(np.max(np.abs(analytic - numeric) / denom)))
    return worst < 1e-5, f"max relative error {worst:.2e}"


def _check_layer_sums():
    _, prop, stats, phases, antennas, power = _tiny_setup(3)
    cascade = compose_cascade(phases, prop)
    grad = gradient_theta(stats, cascade, prop, antennas, power)
    sums = np.abs(grad.sum(axis=0)).max()
    scale = np.linalg.norm(grad)
    return sums < 1e-8 * scale, f"per-layer sum {sums:.2e} vs norm {scale:.2e}"


def _check_cascade_identity():
    _, prop, _, phases, _, _ = _tiny_setup(4, num_layers=3)
    cascade = compose_cascade(phases, prop)
    phase_diag = np.exp(1j * cascade.theta)
    worst = 0.0
    for l in range(3):
        rebuilt = cascade.post[l] @ (phase_diag[:, l, None] * cascade.pre[l])
        worst = max(
            worst,
            float(
                np.linalg.norm(rebuilt - cascade.G) / np.linalg.norm(cascade.G)
            ),
        )
    return worst < 1e-10, f"split identity error {worst:.2e}"


def _check_wrap():
    values = np.array([-7.0, -1e-9, 0.0, 1e-9, np.pi, 2 * np.pi, 100.0])
    wrapped = wrap_phases(values)
    ok = bool(np.all(wrapped > 0.0) and np.all(wrapped <= 2 * np.pi))
    ok = ok and np.allclose(np.exp(1j * wrapped), np.exp(1j * values), atol=1e-12)
    return ok, f"range ({wrapped.min():.3g}, {wrapped.max():.3g}]"


def _check_waterfill():
    rng = np.random.default_rng(5)
    stats = synthetic_stats(rng, 3, 9)
    _, prop, _, phases, _, _ = _tiny_setup(5, num_users=3)
    cascade = compose_cascade(phases, prop)
    ctx = objective_context(stats, cascade, prop, np.arange(3))
    power = PowerAllocation.uniform(10.0, 3)
    for _ in range(20):
        power = waterfill_step(ctx, power)
    budget_err = abs(power.p.sum() - 10.0)
    ok = budget_err <= 1e-9 * 10.0 and np.all(power.p >= 0.0)
    return ok, f"budget error {budget_err:.2e}"


def _check_hungarian():
    import itertools

    rng = np.random.default_rng(6)
    for _ in range(10):
        k, m = int(rng.integers(1, 5)), int(rng.integers(5, 7))
        cost = rng.random((k, m))
        cols, total = hungarian_assign(cost)
        brute = min(
            sum(cost[i, p[i]] for i in range(k))
            for p in itertools.permutations(range(m), k)
        )
        if abs(total - brute) > 1e-12:
            return False, f"cost {total} != brute force {brute}"
    return True, "10 random instances match brute force"


def _check_grouping():
    rng = np.random.default_rng(7)
    stats = synthetic_stats(rng, 7, 16)
    stats.h_los[1] = stats.h_los[0]  # force an identical pair
    stats.beta[1] = stats.beta[0]
    plan = greedy_grouping(stats, 3)
    covered = sorted(int(u) for g in plan.groups for u in g)
    separated = not any({0, 1} <= set(g.tolist()) for g in plan.groups)
    ok = covered == list(range(7)) and separated
    return ok, f"{plan.num_groups} groups, identical pair separated: {separated}"


def _check_channel_energy():
    rng = np.random.default_rng(8)
    stats = synthetic_stats(rng, 2, 16)
    total = 0.0
    draws = 20000
    gen = np.random.default_rng(9)
    for _ in range(draws):
        total += np.abs(draw_channels(stats, gen).h[0]) ** 2 @ np.ones(16)
    expected = stats.beta[0] * 16
    rel = abs(total / draws - expected) / expected
    return rel < 0.05, f"mean energy off by {rel:.3%}"


def _check_zf():
    rng = np.random.default_rng(10)
    h = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    pre = zf_precoder(h, 8.0, 1.0)
    cross = np.abs(h @ pre.directions) ** 2
    leak = (cross.sum() - np.trace(cross)) / np.trace(cross)
    return leak < 1e-9, f"relative interference {leak:.2e}"


def _check_steering():
    geometry = SimGeometry(
        wavelength=0.075, num_layers=2, atoms_per_layer=16, num_antennas=4
    )
    v = steering_vector(np.pi / 2, 0.3, geometry)
    return bool(np.allclose(v, 1.0)), "boresight response is all-ones"


CHECKS = (
    ("gradient matches finite differences", _check_gradient),
    ("per-layer gradient sums vanish", _check_layer_sums),
    ("cascade split identity", _check_cascade_identity),
    ("phase wrapping stays in (0, 2*pi]", _check_wrap),
    ("water-filling keeps the budget", _check_waterfill),
    ("assignment matches brute force", _check_hungarian),
    ("grouping partitions and separates clones", _check_grouping),
    ("channel draw energy", _check_channel_energy),
    ("zero-forcing suppresses interference", _check_zf),
    ("boresight steering vector", _check_steering),
)


def run_selftest():
    """Run every check; returns a list of (name, ok, detail)."""
    report = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        report.append((name, bool(ok), detail))
    return report
