"""Digital precoding references and randomized control schemes.

The digital baselines model a conventional multi-antenna transmitter whose
antennas sit on a centered subset of the last metasurface layer's atom
positions, so they see exactly the same statistical CSI as the wave-domain
system and the comparison is apples-to-apples on the same sum-rate bound.
Random phases / random grouping / random assignment are the null controls
for the optimized counterparts.
"""

import math
from dataclasses import dataclass

import numpy as np

from .beamforming import PhaseConfig
from .optimizer import ObjectiveContext, PowerAllocation
from .scheduler import AntennaAssignment, GroupingPlan

__all__ = [
    "DigitalPrecoder",
    "waterfill_exact",
    "zf_precoder",
    "mmse_precoder",
    "last_layer_antenna_subset",
    "effective_channel",
    "precoder_context",
    "random_phases",
    "random_grouping",
    "random_assignment",
    "random_controls",
]


@dataclass
class DigitalPrecoder:
    """Unit-norm beamforming directions (columns) with per-user powers."""

    directions: np.ndarray  # (M_a, K) complex, unit-norm columns
    powers: np.ndarray  # (K,) watts

    def __post_init__(self):
        norms = np.linalg.norm(self.directions, axis=0)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("precoder columns must have unit norm")
        if np.any(self.powers < 0.0):
            raise ValueError("powers must be nonnegative")


def waterfill_exact(gains, total_power):
    """Classical water-filling over parallel channels with the given SNR gains.

    Solves max sum log(1 + g_k p_k) s.t. sum p_k = total, p >= 0 exactly by
    activating channels in order of decreasing gain.
    """
    gains = np.asarray(gains, dtype=float)
    if np.any(gains < 0.0):
        raise ValueError("gains must be nonnegative")
    active_order = np.argsort(-gains, kind="stable")
    inv = np.where(gains > 0.0, 1.0 / np.where(gains > 0.0, gains, 1.0), np.inf)
    powers = np.zeros_like(gains)
    for count in range(len(gains), 0, -1):
        active = active_order[:count]
        if not np.all(np.isfinite(inv[active])):
            continue
        level = (total_power + inv[active].sum()) / count
        if level >= inv[active].max():
            powers[active] = level - inv[active]
            break
    else:
        raise ValueError("no channel with positive gain")
    return powers


def zf_precoder(channel, total_power, noise_power):
    """Zero-forcing directions with water-filled powers.

    ``channel`` is the K x M_a effective channel (rows are user channels,
    including the path gain). Directions are the normalized columns of
    H^H (H H^H)^-1, leaving residual cross-user interference at numerical
    noise; powers come from classical water-filling on the resulting
    interference-free SNRs. Raises on a rank-deficient channel.
    """
    h = np.asarray(channel)
    k, m = h.shape
    if k > m:
        raise ValueError(f"need K <= M_a, got {k}x{m}")
    gram = h @ h.conj().T
    if np.linalg.matrix_rank(h) < k:
        raise ValueError("channel matrix is rank deficient")
    raw = h.conj().T @ np.linalg.inv(gram)
    norms = np.linalg.norm(raw, axis=0)
    directions = raw / norms
    noise = np.broadcast_to(np.asarray(noise_power, dtype=float), (k,))
    own = np.abs(np.einsum("km,mk->k", h, directions)) ** 2
    powers = waterfill_exact(own / noise, total_power)
    return DigitalPrecoder(directions=directions, powers=powers)


def mmse_precoder(channel, total_power, noise_power):
    """Regularized inverse directions with uniform powers.

    Directions are the normalized columns of H^H (H H^H + (K nbar / P) I)^-1
    with nbar the mean noise power; as the noise vanishes they converge to
    the zero-forcing directions.
    """
    h = np.asarray(channel)
    k = h.shape[0]
    loading = k * float(np.mean(noise_power)) / total_power
    raw = h.conj().T @ np.linalg.inv(h @ h.conj().T + loading * np.eye(k))
    directions = raw / np.linalg.norm(raw, axis=0)
    powers = np.full(k, total_power / k)
    return DigitalPrecoder(directions=directions, powers=powers)


def last_layer_antenna_subset(geometry, count):
    """Indices of ``count`` last-layer atoms closest to the plane center.

    Deterministic (distance, then index, tie-break); for a square count on
    an odd-sided grid this is the centered square block.
    """
    if count > geometry.atoms_per_layer:
        raise ValueError("subset larger than the layer")
    pos = geometry.last_layer_positions()
    r2 = pos[:, 0] ** 2 + pos[:, 1] ** 2
    return np.lexsort((np.arange(len(r2)), np.round(r2 / geometry.wavelength**2, 9)))[
        :count
    ]


def effective_channel(stats, geometry, antenna_indices):
    """K x M_a digital-baseline channel: sqrt(beta_k) h_k^H at the subset atoms."""
    idx = np.asarray(antenna_indices, dtype=int)
    return np.sqrt(stats.beta)[:, None] * stats.h_los[:, idx].conj()


def precoder_context(channel, precoder, noise_power):
    """Objective context of a digital precoder on the same sum-rate bound."""
    k = channel.shape[0]
    alpha = np.abs(np.asarray(channel) @ precoder.directions) ** 2
    noise = np.broadcast_to(np.asarray(noise_power, dtype=float), (k,)).copy()
    return ObjectiveContext(alpha=alpha, noise_power=noise)


def precoder_power(precoder, total_power):
    return PowerAllocation(precoder.powers, total_power)


def random_phases(geometry, rng):
    """Uniform random phase configuration for the given stack."""
    return PhaseConfig.random(
        geometry.atoms_per_layer, geometry.num_layers, np.random.default_rng(rng)
    )


def random_grouping(num_users, capacity, rng):
    """Random valid partition: shuffle users, chop into capacity-sized groups."""
    rng = np.random.default_rng(rng)
    order = rng.permutation(num_users)
    num_groups = math.ceil(num_users / capacity)
    groups = [
        np.sort(order[g * capacity : (g + 1) * capacity]) for g in range(num_groups)
    ]
    return GroupingPlan(groups=groups, capacity=capacity, num_users=num_users)


def random_assignment(group, num_antennas, rng):
    """Uniform random injective user -> antenna map for one group."""
    group = np.asarray(group, dtype=int)
    rng = np.random.default_rng(rng)
    if len(group) > num_antennas:
        raise ValueError("more users than antennas")
    antennas = rng.permutation(num_antennas)[: len(group)]
    return AntennaAssignment(users=group, antennas=antennas)


def random_controls(seed, geometry, num_users, capacity):
    """Seeded trio of null controls: phases, grouping, first-group assignment."""
    rng = np.random.default_rng(seed)
    phases = random_phases(geometry, rng)
    plan = random_grouping(num_users, capacity, rng)
    assignment = random_assignment(plan.groups[0], geometry.num_antennas, rng)
    return phases, plan, assignment
