"""Joint power / phase optimization of the statistical sum-rate bound.

The objective is R = sum_k log2(1 + gamma_k) with gamma_k the average-SINR
proxy built from statistical CSI only: gamma_k = a_kk p_k / (sum_{k' != k}
a_kk' p_k' + noise_k), a_kk' = beta_k |h_k^H G w_k'|^2. Powers are updated
with a damped water-filling step and phases with gradient ascent under an
Armijo backtracking line search; the two alternate until the bound stops
improving.
"""

from dataclasses import dataclass, field

import numpy as np

from .beamforming import PhaseConfig, compose_cascade

__all__ = [
    "PowerAllocation",
    "ObjectiveContext",
    "AOSettings",
    "AOResult",
    "objective_context",
    "objective",
    "waterfill_step",
    "gradient_theta",
    "armijo_phase_step",
    "alternating_optimize",
]

_LOG2E = 1.0 / np.log(2.0)
_BUDGET_RTOL = 1e-9


@dataclass
class PowerAllocation:
    """Per-user transmit powers under a total budget.

    Invariants: every power is nonnegative and the powers sum to
    ``total_power`` within 1e-9 relative; violated inputs raise.
    """

    p: np.ndarray
    total_power: float

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p < 0.0):
            raise ValueError("powers must be nonnegative")
        if abs(self.p.sum() - self.total_power) > _BUDGET_RTOL * self.total_power:
            raise ValueError(
                f"powers sum to {self.p.sum()!r}, budget is {self.total_power!r}"
            )

    @classmethod
    def uniform(cls, total_power, num_users):
        return cls(np.full(num_users, total_power / num_users), total_power)


@dataclass
class ObjectiveContext:
    """Gain matrix and noise powers that fix the bound for a given cascade.

    ``alpha[k, k']`` is the average power user k receives from the stream
    intended for user k'; the diagonal is the useful signal gain.
    """

    alpha: np.ndarray  # (K, K) real, nonnegative
    noise_power: np.ndarray  # (K,) watts


def objective_context(stats, cascade, prop, assignment):
    """Build the K x K gain matrix for a cascade and an antenna assignment."""
    antennas = np.asarray(getattr(assignment, "antennas", assignment), dtype=int)
    w_sel = prop.antenna_to_first[:, antennas]
    cross = stats.h_los.conj() @ cascade.G @ w_sel  # (K, K): h_k^H G w_k'
    alpha = stats.beta[:, None] * np.abs(cross) ** 2
    return ObjectiveContext(alpha=alpha, noise_power=np.asarray(stats.noise_power, float))


def objective(ctx, power):
    """Statistical sum-rate bound in bits/s/Hz for the given powers."""
    p = power.p if isinstance(power, PowerAllocation) else np.asarray(power, float)
    total = ctx.alpha @ p
    signal = np.diag(ctx.alpha) * p
    interference = total - signal
    gamma = signal / (interference + ctx.noise_power)
    return float(np.sum(np.log2(1.0 + gamma)))


def waterfill_step(ctx, power):
    """One damped water-filling update of the power vector.

    Candidate powers are c_k = max(0, level - I_k / a_kk) with I_k the
    current interference-plus-noise of user k, the common level found by
    bisection so the candidates spend the full budget; the returned powers
    are c / K + (1 - 1/K) * p, which keeps them nonnegative and on budget.
    Raises if no user has a positive direct gain.
    """
    p = power.p
    total_power = power.total_power
    k = p.shape[0]
    own = np.diag(ctx.alpha).copy()
    if not np.any(own > 0.0):
        raise ValueError("no serviceable user: all direct gains are zero")

    interference = ctx.alpha @ p - own * p + ctx.noise_power
    with np.errstate(divide="ignore"):
        floor = np.where(own > 0.0, interference / np.where(own > 0.0, own, 1.0), np.inf)

    def spent(level):
        return np.maximum(level - floor, 0.0).sum()

    lo = 0.0
    hi = float(np.max(floor[np.isfinite(floor)])) + total_power
    tol = 1e-13 * total_power
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        s = spent(mid)
        if abs(s - total_power) <= tol:
            break
        if s < total_power:
            lo = mid
        else:
            hi = mid
    candidates = np.maximum(mid - floor, 0.0)
    if candidates.sum() > 0.0:
        # Land exactly on the budget; the bisection residual is ~1e-13 relative.
        candidates *= total_power / candidates.sum()
    new_p = candidates / k + (1.0 - 1.0 / k) * p
    return PowerAllocation(new_p, total_power)


def gradient_theta(stats, cascade, prop, assignment, power):
    """Analytic gradient of the bound w.r.t. every phase shift, shape (N, L).

    Uses the cached partial products of ``cascade``, which must have been
    built from the phases being differentiated. Each entry is
    log2(e) * sum_k [ (sum_k' s_kk' p_k') / (sum_k' a_kk' p_k' + noise_k)
                    - (sum_{k' != k} ...) / (sum_{k' != k} ... + noise_k) ]
    with s_kk' = d a_kk' / d theta = 2 beta_k Im{ e^{-j theta}
    (w_k'^H pre_col)(post_col^H h_k)(h_k^H G w_k') }.
    """
    p = power.p if isinstance(power, PowerAllocation) else np.asarray(power, float)
    antennas = np.asarray(getattr(assignment, "antennas", assignment), dtype=int)
    w_sel = prop.antenna_to_first[:, antennas]
    h = stats.h_los  # (K, N)
    beta = stats.beta

    cross = h.conj() @ cascade.G @ w_sel  # (K, K)
    alpha = beta[:, None] * np.abs(cross) ** 2
    denom_all = alpha @ p + stats.noise_power
    denom_int = denom_all - np.diag(alpha) * p

    weighted = cross * p[None, :]  # (K, K): h_k^H G w_k' p_k'
    n_atoms, n_layers = cascade.theta.shape
    grad = np.empty((n_atoms, n_layers))
    for l in range(n_layers):
        fwd = cascade.pre[l] @ w_sel  # (N, K): column k' feeds atom n
        back = cascade.post[l].conj().T @ h.T  # (N, K): column k leaves atom n
        conj_phase = np.exp(-1j * cascade.theta[:, l])
        # sum over k' of conj(fwd) * (h_k^H G w_k' p_k'), for every (n, k)
        mixed_all = conj_phase[:, None] * (np.conj(fwd) @ weighted.T) * back
        mixed_self = (
            conj_phase[:, None]
            * np.conj(fwd)
            * (np.diag(weighted)[None, :])
            * back
        )
        s_all = 2.0 * beta[None, :] * np.imag(mixed_all)
        s_int = s_all - 2.0 * beta[None, :] * np.imag(mixed_self)
        grad[:, l] = _LOG2E * (s_all @ (1.0 / denom_all) - s_int @ (1.0 / denom_int))
    return grad


def _evaluate(phases, stats, prop, assignment, power):
    cascade = compose_cascade(phases, prop)
    ctx = objective_context(stats, cascade, prop, assignment)
    return objective(ctx, power)


def armijo_phase_step(
    phases,
    gradient,
    stats,
    prop,
    assignment,
    power,
    mu0=1.0,
    shrink=0.5,
    c=1e-4,
    max_halvings=30,
):
    """Backtracking gradient-ascent step on the phases.

    Starts from step size ``mu0`` and halves until the sufficient-increase
    test R(new) >= R(old) + c * mu * ||grad||^2 passes; if it never does,
    the input configuration is returned unchanged, so the bound never
    decreases across a phase step.
    """
    base = _evaluate(phases, stats, prop, assignment, power)
    g2 = float(np.sum(gradient**2))
    if g2 == 0.0:
        return phases, base
    mu = mu0
    for _ in range(max_halvings + 1):
        trial = phases.shifted(mu * gradient)
        value = _evaluate(trial, stats, prop, assignment, power)
        if value >= base + c * mu * g2:
            return trial, value
        mu *= shrink
    return phases, base


@dataclass
class AOSettings:
    """Knobs of the alternating optimization loop."""

    max_outer: int = 200
    tol: float = 1e-4
    power_sweeps: int = 5
    armijo_mu0: float = 1.0
    armijo_shrink: float = 0.5
    armijo_c: float = 1e-4
    armijo_max_halvings: int = 30
    optimize_phases: bool = True


@dataclass
class AOResult:
    """Best-seen configuration plus the per-iteration bound trace."""

    phases: PhaseConfig
    power: PowerAllocation
    rbar: float
    initial_rbar: float
    trace_power: np.ndarray  # bound after the power sweeps, per outer iter
    trace_phase: np.ndarray  # bound after the phase step, per outer iter
    outer_iterations: int = 0
    settings: AOSettings = field(default_factory=AOSettings)


def alternating_optimize(stats, prop, assignment, total_power, settings=None, seed=0):
    """Alternate damped water-filling and Armijo phase steps from random phases.

    Each outer iteration runs ``power_sweeps`` water-filling updates under
    the current cascade, then one gradient phase step. The loop stops when
    the bound's relative change falls below ``tol`` or ``max_outer`` is
    reached; the best configuration seen anywhere is returned, so the
    result is never worse than the random initialization.
    """
    settings = settings or AOSettings()
    rng = np.random.default_rng(seed)
    geometry = prop.geometry
    phases = PhaseConfig.random(geometry.atoms_per_layer, geometry.num_layers, rng)
    power = PowerAllocation.uniform(total_power, stats.num_users)

    initial = _evaluate(phases, stats, prop, assignment, power)
    best = (initial, phases, power)
    trace_power, trace_phase = [], []
    previous = initial
    outer = 0
    for outer in range(1, settings.max_outer + 1):
        cascade = compose_cascade(phases, prop)
        ctx = objective_context(stats, cascade, prop, assignment)
        for _ in range(settings.power_sweeps):
            power = waterfill_step(ctx, power)
        after_power = objective(ctx, power)
        if after_power > best[0]:
            best = (after_power, phases, power)

        if settings.optimize_phases:
            grad = gradient_theta(stats, cascade, prop, assignment, power)
            phases, after_phase = armijo_phase_step(
                phases,
                grad,
                stats,
                prop,
                assignment,
                power,
                mu0=settings.armijo_mu0,
                shrink=settings.armijo_shrink,
                c=settings.armijo_c,
                max_halvings=settings.armijo_max_halvings,
            )
        else:
            after_phase = after_power
        if after_phase > best[0]:
            best = (after_phase, phases, power)
        trace_power.append(after_power)
        trace_phase.append(after_phase)

        if abs(after_phase - previous) <= settings.tol * max(abs(previous), 1e-300):
            break
        previous = after_phase

    return AOResult(
        phases=best[1],
        power=best[2],
        rbar=best[0],
        initial_rbar=initial,
        trace_power=np.asarray(trace_power),
        trace_phase=np.asarray(trace_phase),
        outer_iterations=outer,
        settings=settings,
    )
