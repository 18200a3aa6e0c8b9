"""Deterministic EM transfer model of the stacked-metasurface transmitter.

A transmit antenna array illuminates a stack of metasurface layers. Every
antenna->atom and atom->atom link is a scalar-diffraction coefficient, so
the whole forward model reduces to one complex vector per antenna and one
complex matrix per layer transition. Everything here depends only on the
geometry and is reused unchanged across channel realizations.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SimGeometry",
    "PropagationModel",
    "rs_coefficient",
    "build_propagation",
]


def _grid_side(count, what):
    side = math.isqrt(count)
    if side * side != count:
        raise ValueError(f"{what} must be a perfect square, got {count}")
    return side


def _centered_grid(count, pitch_x, pitch_y, z):
    """(count, 3) positions of a centered planar grid at height z.

    Index n = ix * side + iy, with ix along x and iy along y.
    """
    side = math.isqrt(count)
    ix, iy = np.divmod(np.arange(count), side)
    x = (ix - (side - 1) / 2.0) * pitch_x
    y = (iy - (side - 1) / 2.0) * pitch_y
    return np.column_stack([x, y, np.full(count, float(z))])


@dataclass
class SimGeometry:
    """Physical layout of the antenna array and the metasurface stack.

    The antenna plane sits at z = 0; layer l (1-based) sits at
    z = l * thickness / num_layers, so the last layer is at ``thickness``
    and all plane gaps (including the antenna gap) are equal.

    Parameters
    ----------
    wavelength : float
        Carrier wavelength in meters.
    num_layers : int
        Number of metasurface layers (L >= 1).
    atoms_per_layer : int
        Meta-atoms per layer; must be a perfect square.
    num_antennas : int
        Transmit antennas; must be a perfect square.
    atom_pitch : float, optional
        Grid pitch of the atoms (both axes). Defaults to wavelength / 2.
    antenna_spacing : float, optional
        Grid pitch of the antennas. Defaults to one wavelength.
    thickness : float, optional
        Distance from the antenna plane to the last layer. Defaults to
        5 * wavelength.
    """

    wavelength: float
    num_layers: int
    atoms_per_layer: int
    num_antennas: int
    atom_pitch: float | None = None
    antenna_spacing: float | None = None
    thickness: float | None = None

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.num_layers < 1 or self.atoms_per_layer < 1 or self.num_antennas < 1:
            raise ValueError("num_layers, atoms_per_layer, num_antennas must be >= 1")
        _grid_side(self.atoms_per_layer, "atoms_per_layer")
        _grid_side(self.num_antennas, "num_antennas")
        if self.atom_pitch is None:
            self.atom_pitch = self.wavelength / 2.0
        if self.antenna_spacing is None:
            self.antenna_spacing = self.wavelength
        if self.thickness is None:
            self.thickness = 5.0 * self.wavelength
        if self.atom_pitch <= 0 or self.antenna_spacing <= 0 or self.thickness <= 0:
            raise ValueError("atom_pitch, antenna_spacing, thickness must be positive")

    @property
    def layer_spacing(self):
        return self.thickness / self.num_layers

    def layer_z(self, layer):
        """Height of layer ``layer`` (1-based) above the antenna plane."""
        if not 1 <= layer <= self.num_layers:
            raise ValueError(f"layer must be in 1..{self.num_layers}, got {layer}")
        return layer * self.layer_spacing

    def atom_positions(self, layer):
        """(N, 3) positions of the atoms on layer ``layer`` (1-based)."""
        return _centered_grid(
            self.atoms_per_layer, self.atom_pitch, self.atom_pitch, self.layer_z(layer)
        )

    def antenna_positions(self):
        """(M, 3) positions of the transmit antennas (z = 0 plane)."""
        return _centered_grid(
            self.num_antennas, self.antenna_spacing, self.antenna_spacing, 0.0
        )

    def last_layer_positions(self):
        return self.atom_positions(self.num_layers)


@dataclass
class PropagationModel:
    """Deterministic transfer coefficients derived from a SimGeometry.

    ``inter_layer[i]`` is the N x N matrix mapping the field on layer i+1
    to layer i+2 (so the list holds transitions for layers 2..L), and
    ``antenna_to_first`` is N x M with column m the antenna-m -> layer-1
    vector. Treat both as read-only after construction.
    """

    geometry: SimGeometry
    inter_layer: list = field(default_factory=list)
    antenna_to_first: np.ndarray = None


def rs_coefficient(src_pos, dst_pos, plane_normal, geometry):
    """Scalar-diffraction coefficient between points on adjacent planes.

    Implements w = (dx*dy*cos(a)/d) * (1/(2*pi*d) - j/lambda) * exp(j*2*pi*d/lambda)
    with d the source->destination distance and a the angle between the
    propagation direction and the source plane normal. The absolute value
    of the normal component is used so either normal orientation works.

    Raises ValueError for coincident points.
    """
    src = np.asarray(src_pos, dtype=float)
    dst = np.asarray(dst_pos, dtype=float)
    normal = np.asarray(plane_normal, dtype=float)
    diff = dst - src
    d = float(np.linalg.norm(diff))
    if d == 0.0:
        raise ValueError("source and destination coincide (zero distance)")
    cos_a = abs(float(diff @ normal)) / d
    lam = geometry.wavelength
    area = geometry.atom_pitch * geometry.atom_pitch
    return (
        (area * cos_a / d)
        * (1.0 / (2.0 * np.pi * d) - 1j / lam)
        * np.exp(2j * np.pi * d / lam)
    )


def _plane_to_plane(src_positions, dst_positions, geometry):
    """Vectorized coefficient matrix: entry (n, m) is src m -> dst n."""
    diff = dst_positions[:, None, :] - src_positions[None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    if np.any(d == 0.0):
        raise ValueError("source and destination planes share a point")
    cos_a = np.abs(diff[..., 2]) / d  # plane normals are +z
    lam = geometry.wavelength
    area = geometry.atom_pitch * geometry.atom_pitch
    return (
        (area * cos_a / d)
        * (1.0 / (2.0 * np.pi * d) - 1j / lam)
        * np.exp(2j * np.pi * d / lam)
    )


def build_propagation(geometry):
    """Build all inter-layer matrices and the antenna->first-layer vectors.

    Identical geometry yields a bitwise-identical model; every entry equals
    ``rs_coefficient`` evaluated on the corresponding point pair.
    """
    inter_layer = []
    for layer in range(2, geometry.num_layers + 1):
        inter_layer.append(
            _plane_to_plane(
                geometry.atom_positions(layer - 1),
                geometry.atom_positions(layer),
                geometry,
            )
        )
    antenna_to_first = _plane_to_plane(
        geometry.antenna_positions(), geometry.atom_positions(1), geometry
    )
    return PropagationModel(
        geometry=geometry, inter_layer=inter_layer, antenna_to_first=antenna_to_first
    )
