"""Phase-shift state of the metasurface stack and its cascade transfer matrix.

The stack applies a diagonal unit-modulus transform per layer; the overall
transmit transform is G = Phi_L W_L ... Phi_2 W_2 Phi_1. The partial
products before and after each layer are cached because the phase gradient
needs all of them, and one cascade build then serves every (atom, layer)
entry.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhaseConfig",
    "CascadeState",
    "wrap_phases",
    "phi_layer",
    "compose_cascade",
]

_TWO_PI = 2.0 * np.pi


def wrap_phases(theta):
    """Map phase values into the half-open interval (0, 2*pi].

    Zero maps to 2*pi, keeping the interval open at 0.
    """
    theta = np.asarray(theta, dtype=float)
    return theta - _TWO_PI * np.ceil(theta / _TWO_PI - 1.0)


@dataclass
class PhaseConfig:
    """Per-atom, per-layer phase shifts, shape (N, L), wrapped into (0, 2*pi]."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        self.theta = wrap_phases(theta)

    @property
    def num_atoms(self):
        return self.theta.shape[0]

    @property
    def num_layers(self):
        return self.theta.shape[1]

    @classmethod
    def random(cls, num_atoms, num_layers, rng):
        """Uniform random phases, one independent draw per entry."""
        rng = np.random.default_rng(rng)
        return cls(rng.uniform(0.0, _TWO_PI, size=(num_atoms, num_layers)))

    @classmethod
    def zeros(cls, num_atoms, num_layers):
        return cls(np.zeros((num_atoms, num_layers)))

    def shifted(self, delta):
        """New config with ``delta`` (broadcastable to (N, L)) added and re-wrapped."""
        return PhaseConfig(self.theta + delta)


def phi_layer(theta_col):
    """Diagonal unit-modulus transform of one layer: diag(exp(j*theta))."""
    return np.diag(np.exp(1j * np.asarray(theta_col, dtype=float)))


@dataclass
class CascadeState:
    """Cascade matrix G plus per-layer partial products around each transform.

    For every layer l (1-based), G == post[l-1] @ Phi_l @ pre[l-1]:
    ``pre[l-1]`` is everything the field traverses before layer l's phase
    transform (identity for the first layer) and ``post[l-1]`` everything
    after it (identity for the last). ``theta`` records the phase matrix
    the state was built from. Immutable once built.
    """

    G: np.ndarray
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)
    theta: np.ndarray = None


def compose_cascade(phases, prop):
    """Build the cascade matrix and its partial products for given phases.

    Cost is O(L * N^3); the partial products come out of the same two
    passes that produce G itself.
    """
    theta = phases.theta
    n_atoms, n_layers = theta.shape
    if n_atoms != prop.geometry.atoms_per_layer:
        raise ValueError(
            f"phase grid has {n_atoms} atoms per layer, geometry has "
            f"{prop.geometry.atoms_per_layer}"
        )
    if n_layers != prop.geometry.num_layers:
        raise ValueError(
            f"phase grid has {n_layers} layers, geometry has "
            f"{prop.geometry.num_layers}"
        )
    phase_diag = np.exp(1j * theta)  # column l is the diagonal of Phi_(l+1)

    eye = np.eye(n_atoms, dtype=complex)
    pre = [eye]
    for l in range(2, n_layers + 1):
        w = prop.inter_layer[l - 2]
        pre.append(w @ (phase_diag[:, l - 2, None] * pre[-1]))

    post = [eye]
    for l in range(n_layers - 1, 0, -1):
        w = prop.inter_layer[l - 1]
        post.append(post[-1] @ (phase_diag[:, l, None] * w))
    post.reverse()

    # G = post_1 @ Phi_1 (pre_1 is the identity).
    G = post[0] * phase_diag[:, 0][None, :]
    return CascadeState(G=G, pre=pre, post=post, theta=theta.copy())
