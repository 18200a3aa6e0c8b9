"""User grouping by channel-correlation minimization and antenna selection.

Large populations are partitioned into groups served in separate time
slots; inside a slot, users should be near-orthogonal, so the grouping
greedily minimizes the worst pairwise correlation within each group. Each
group then gets an injective user->antenna map chosen to minimize the
energy an antenna leaks onto non-target users, evaluated over several
random phase draws and solved per draw as a linear assignment problem.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .beamforming import PhaseConfig, compose_cascade

__all__ = [
    "GroupingPlan",
    "AntennaAssignment",
    "coc",
    "coc_matrix",
    "grouping_objective",
    "greedy_grouping",
    "leakage_matrix",
    "hungarian_assign",
    "select_antennas",
]


def coc(h_i, h_j):
    """Correlation magnitude |h_i^H h_j| / (||h_i|| ||h_j||), in [0, 1].

    Scale-invariant; raises on a zero vector.
    """
    h_i = np.asarray(h_i)
    h_j = np.asarray(h_j)
    n_i = np.linalg.norm(h_i)
    n_j = np.linalg.norm(h_j)
    if n_i == 0.0 or n_j == 0.0:
        raise ValueError("correlation of a zero vector is undefined")
    return float(np.abs(np.vdot(h_i, h_j)) / (n_i * n_j))


def coc_matrix(vectors):
    """Pairwise correlation magnitudes of the rows of ``vectors``."""
    v = np.asarray(vectors)
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("correlation of a zero vector is undefined")
    gram = v @ v.conj().T
    return np.abs(gram) / np.outer(norms, norms)


@dataclass
class GroupingPlan:
    """Disjoint user groups covering the whole population exactly once."""

    groups: list  # list of int arrays, each of size <= capacity
    capacity: int
    num_users: int

    def __post_init__(self):
        self.groups = [np.asarray(g, dtype=int) for g in self.groups]
        seen = np.concatenate([g for g in self.groups]) if self.groups else np.array([], int)
        if sorted(seen.tolist()) != list(range(self.num_users)):
            raise ValueError("groups must partition the user set exactly")
        if any(len(g) > self.capacity for g in self.groups):
            raise ValueError(f"group exceeds capacity {self.capacity}")

    @property
    def num_groups(self):
        return len(self.groups)


def grouping_objective(groups, corr):
    """Worst intra-group pairwise correlation (0 for singleton groups)."""
    worst = 0.0
    for g in groups:
        g = np.asarray(g, dtype=int)
        if len(g) >= 2:
            sub = corr[np.ix_(g, g)]
            worst = max(worst, float(np.max(sub[~np.eye(len(g), dtype=bool)])))
    return worst


def _statistical_vectors(stats):
    return np.sqrt(stats.beta)[:, None] * stats.h_los


def greedy_grouping(stats, capacity):
    """Partition all users into ceil(K_tot / capacity) groups greedily.

    Correlations are measured on the statistical proxies sqrt(beta) * h_los.
    Users are processed in order of decreasing mean correlation to the rest
    of the population; each goes to the non-full group where the resulting
    intra-group maximum correlation is smallest, ties to the lowest group
    index. Deterministic.
    """
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    k_tot = stats.num_users
    corr = coc_matrix(_statistical_vectors(stats))
    num_groups = math.ceil(k_tot / capacity)

    if k_tot > 1:
        mean_corr = (corr.sum(axis=1) - 1.0) / (k_tot - 1)
    else:
        mean_corr = np.zeros(1)
    order = np.argsort(-mean_corr, kind="stable")

    members = [[] for _ in range(num_groups)]
    group_max = [0.0] * num_groups
    for user in order:
        best_g, best_val = None, None
        for g in range(num_groups):
            if len(members[g]) >= capacity:
                continue
            if members[g]:
                val = max(group_max[g], float(np.max(corr[user, members[g]])))
            else:
                val = 0.0
            if best_val is None or val < best_val:
                best_g, best_val = g, val
        members[best_g].append(int(user))
        group_max[best_g] = best_val
    groups = [np.sort(np.asarray(m, dtype=int)) for m in members if m]
    return GroupingPlan(groups=groups, capacity=capacity, num_users=k_tot)


@dataclass
class AntennaAssignment:
    """Injective user -> antenna map for one group.

    ``antennas[i]`` serves ``users[i]``; the ``users`` order matches the
    row order of any per-group channel stats built from the same group.
    """

    users: np.ndarray
    antennas: np.ndarray
    total_leakage: float | None = None
    draw_index: int | None = None
    num_draws: int | None = None

    def __post_init__(self):
        self.users = np.asarray(self.users, dtype=int)
        self.antennas = np.asarray(self.antennas, dtype=int)
        if self.users.shape != self.antennas.shape:
            raise ValueError("users and antennas must have equal length")
        if len(set(self.antennas.tolist())) != len(self.antennas):
            raise ValueError("antenna map must be injective")

    @classmethod
    def identity(cls, num_users):
        idx = np.arange(num_users)
        return cls(users=idx, antennas=idx.copy())


def leakage_matrix(stats, cascade, prop, group):
    """Energy each antenna deposits on the group's non-target users.

    Entry (k, m) is sum over the group's other users k' of
    beta_k' |h_k'^H G w_m|^2, i.e. the interference antenna m would cause
    if it carried user k's stream under uniform power. Nonnegative;
    all-zero for a single-user group.
    """
    group = np.asarray(group, dtype=int)
    h = stats.h_los[group]
    beta = stats.beta[group]
    received = beta[:, None] * np.abs(h.conj() @ cascade.G @ prop.antenna_to_first) ** 2
    return received.sum(axis=0)[None, :] - received


def hungarian_assign(cost):
    """Minimum-cost injective row -> column assignment of a K x M matrix.

    Returns (columns, total) where ``columns[k]`` is the column assigned to
    row k. Among all optimal assignments the lexicographically smallest
    column tuple is returned, which makes the result deterministic even
    with tied costs. Requires K <= M and finite costs.
    """
    cost = np.asarray(cost, dtype=float)
    k, m = cost.shape
    if k > m:
        raise ValueError(f"need at least as many columns as rows, got {k}x{m}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("costs must be finite")

    rows, cols = linear_sum_assignment(cost)
    optimum = float(cost[rows, cols].sum())
    tol = 1e-12 * (1.0 + abs(optimum))

    chosen = np.empty(k, dtype=int)
    remaining = list(range(m))
    prefix = 0.0
    for row in range(k):
        for col in remaining:
            rest_rows = np.arange(row + 1, k)
            rest_cols = [c for c in remaining if c != col]
            if rest_rows.size:
                sub = cost[np.ix_(rest_rows, rest_cols)]
                r, c = linear_sum_assignment(sub)
                rest = float(sub[r, c].sum())
            else:
                rest = 0.0
            if prefix + cost[row, col] + rest <= optimum + tol:
                chosen[row] = col
                prefix += cost[row, col]
                remaining.remove(col)
                break
        else:
            raise RuntimeError("assignment refinement failed to extend a prefix")
    return chosen, optimum


def select_antennas(stats, prop, group, num_draws, seed):
    """Pick the group's antenna map by best-of-I random-phase leakage.

    Draws ``num_draws`` independent uniform phase configurations; for each,
    builds the cascade, the leakage matrix and its optimal assignment, and
    keeps the assignment with the smallest total leakage (first draw wins
    ties). Deterministic per seed.
    """
    if num_draws < 1:
        raise ValueError("num_draws must be >= 1")
    group = np.asarray(group, dtype=int)
    geometry = prop.geometry
    if len(group) > geometry.num_antennas:
        raise ValueError(
            f"group of {len(group)} users exceeds {geometry.num_antennas} antennas"
        )
    rng = np.random.default_rng(seed)
    best = None
    for i in range(num_draws):
        phases = PhaseConfig.random(geometry.atoms_per_layer, geometry.num_layers, rng)
        cascade = compose_cascade(phases, prop)
        leak = leakage_matrix(stats, cascade, prop, group)
        antennas, total = hungarian_assign(leak)
        if best is None or total < best[0]:
            best = (total, antennas, i)
    total, antennas, draw = best
    return AntennaAssignment(
        users=group,
        antennas=antennas,
        total_leakage=total,
        draw_index=draw,
        num_draws=num_draws,
    )
