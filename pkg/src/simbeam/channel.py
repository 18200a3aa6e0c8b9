"""LEO downlink channel model: user geometry, statistical CSI, fading draws.

Users are dropped uniformly by area on a spherical cap under the satellite;
slant range and elevation follow from spherical trigonometry on a 6371 km
Earth. Each user's channel is Rician around the line-of-sight response of
the last metasurface layer, with a rank-one scattered component (scatterers
sit far below the satellite, so the scattered field arrives along the same
direction as the LoS ray).
"""

from dataclasses import dataclass

import numpy as np

from .units import BOLTZMANN, EARTH_RADIUS, db_to_linear

__all__ = [
    "UserGeometry",
    "ChannelStats",
    "ChannelDraw",
    "DEFAULT_RICIAN_TABLES_DB",
    "rician_factor_db",
    "path_gain",
    "thermal_noise_power",
    "steering_vector",
    "sample_scenario",
    "draw_channels",
]

# Elevation (degrees) -> Rician factor (dB), linearly interpolated and
# clamped at the ends. These defaults are configuration, not measured
# ground truth; they are monotone in elevation with the suburban profile
# strictly above the urban one.
DEFAULT_RICIAN_TABLES_DB = {
    "suburban": ((10.0, 11.0), (30.0, 14.0), (50.0, 16.5), (70.0, 18.5), (90.0, 20.0)),
    "urban": ((10.0, 3.0), (30.0, 5.5), (50.0, 7.5), (70.0, 9.0), (90.0, 10.0)),
}


def rician_factor_db(elevation_rad, env="suburban", tables=None):
    """Rician factor in dB for a given elevation, from a piecewise-linear table."""
    tables = DEFAULT_RICIAN_TABLES_DB if tables is None else tables
    if env not in tables:
        raise ValueError(f"unknown environment {env!r}; have {sorted(tables)}")
    pts = tables[env]
    elev_deg = np.degrees(np.asarray(elevation_rad, dtype=float))
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return np.interp(elev_deg, xs, ys)


def path_gain(slant_range, wavelength, tx_gain_dbi=6.0, rx_gain_dbi=0.0):
    """Free-space power gain g_tx * g_rx * (wavelength / (4*pi*r))^2."""
    g = db_to_linear(tx_gain_dbi) * db_to_linear(rx_gain_dbi)
    return g * (wavelength / (4.0 * np.pi * np.asarray(slant_range, dtype=float))) ** 2


def thermal_noise_power(bandwidth, temperature):
    """Receiver noise power k_B * B * T in watts."""
    return BOLTZMANN * bandwidth * temperature


@dataclass
class UserGeometry:
    """Per-user placement relative to the satellite.

    ``elevation``/``azimuth`` are the satellite's angles as seen from the
    user terminal; ``off_nadir`` is the user's angle off the array
    boresight as seen from the satellite (what the steering vector needs).
    """

    ground_positions: np.ndarray  # (K, 3), Earth-centered, satellite on +z axis
    slant_range: np.ndarray  # (K,)
    elevation: np.ndarray  # (K,)
    azimuth: np.ndarray  # (K,)
    off_nadir: np.ndarray  # (K,)

    @property
    def num_users(self):
        return self.slant_range.shape[0]


@dataclass
class ChannelStats:
    """Slow-varying per-user channel descriptors plus receiver noise power."""

    beta: np.ndarray  # (K,) linear power gain
    kappa: np.ndarray  # (K,) linear Rician factor
    h_los: np.ndarray  # (K, N) unit-modulus LoS response rows
    noise_power: np.ndarray  # (K,) watts

    @property
    def num_users(self):
        return self.beta.shape[0]

    def select(self, users):
        """Stats restricted to the given user indices, in the given order."""
        idx = np.asarray(users, dtype=int)
        return ChannelStats(
            beta=self.beta[idx],
            kappa=self.kappa[idx],
            h_los=self.h_los[idx],
            noise_power=self.noise_power[idx],
        )


@dataclass
class ChannelDraw:
    """One instantaneous realization: row k is user k's channel vector."""

    h: np.ndarray  # (K, N) complex


def steering_vector(elevation, azimuth, geometry):
    """LoS response of the last metasurface layer toward a far-field point.

    ``elevation`` is measured from the array plane (pi/2 = boresight) and
    ``azimuth`` in the plane. Entry n is exp(j * 2*pi/lambda * <p_n, u>)
    with p_n the atom's in-plane position, so all entries have unit
    modulus and boresight gives the all-ones vector.
    """
    pos = geometry.last_layer_positions()
    ux = np.cos(elevation) * np.cos(azimuth)
    uy = np.cos(elevation) * np.sin(azimuth)
    phase = (2.0 * np.pi / geometry.wavelength) * (pos[:, 0] * ux + pos[:, 1] * uy)
    return np.exp(1j * phase)


def sample_scenario(
    seed,
    num_users,
    geometry,
    env="suburban",
    altitude=1000e3,
    service_diameter=600e3,
    tx_gain_dbi=6.0,
    rx_gain_dbi=0.0,
    bandwidth=50e6,
    noise_temperature=290.0,
    rician_tables=None,
):
    """Drop users on the service cap and derive their statistical CSI.

    Deterministic for a given seed: the generator is consumed in the order
    (cap polar draws, azimuth draws). Returns (UserGeometry, ChannelStats).
    """
    if num_users < 1:
        raise ValueError("num_users must be >= 1")
    rng = np.random.default_rng(seed)

    r_earth = EARTH_RADIUS
    r_sat = r_earth + altitude
    # Uniform-by-area polar angle on the spherical cap of arc radius
    # service_diameter / 2, then uniform azimuth.
    cap_angle = (service_diameter / 2.0) / r_earth
    cos_phi = 1.0 - rng.random(num_users) * (1.0 - np.cos(cap_angle))
    phi = np.arccos(np.clip(cos_phi, -1.0, 1.0))
    psi = rng.uniform(0.0, 2.0 * np.pi, num_users)

    slant = np.sqrt(r_earth**2 + r_sat**2 - 2.0 * r_earth * r_sat * cos_phi)
    off_nadir = np.arcsin(np.clip(r_earth * np.sin(phi) / slant, -1.0, 1.0))
    elevation = np.pi / 2.0 - phi - off_nadir

    sin_phi = np.sin(phi)
    ground = r_earth * np.column_stack(
        [sin_phi * np.cos(psi), sin_phi * np.sin(psi), cos_phi]
    )
    users = UserGeometry(
        ground_positions=ground,
        slant_range=slant,
        elevation=elevation,
        azimuth=psi,
        off_nadir=off_nadir,
    )

    beta = path_gain(slant, geometry.wavelength, tx_gain_dbi, rx_gain_dbi)
    kappa = db_to_linear(rician_factor_db(elevation, env, rician_tables))
    h_los = np.stack(
        [
            steering_vector(np.pi / 2.0 - users.off_nadir[k], psi[k], geometry)
            for k in range(num_users)
        ]
    )
    noise = np.full(num_users, thermal_noise_power(bandwidth, noise_temperature))
    stats = ChannelStats(beta=beta, kappa=kappa, h_los=h_los, noise_power=noise)
    return users, stats


def draw_channels(stats, rng):
    """One instantaneous Rician realization per user.

    The scattered component is a single complex-Gaussian fade along the
    LoS direction (rank-one covariance), so each user's vector is
    sqrt(beta) * (sqrt(kappa/(1+kappa)) + sqrt(1/(1+kappa)) * g) * h_los
    with g ~ CN(0, 1). Deterministic per seed; one CN draw per user.
    """
    rng = np.random.default_rng(rng)
    k = stats.num_users
    g = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
    # kappa/(1+kappa) written as 1/(1+1/kappa) so kappa = inf gives pure LoS.
    with np.errstate(divide="ignore"):
        los_frac = 1.0 / (1.0 + 1.0 / stats.kappa)
        nlos_frac = 1.0 / (1.0 + stats.kappa)
    scale = np.sqrt(stats.beta) * (np.sqrt(los_frac) + np.sqrt(nlos_frac) * g)
    return ChannelDraw(h=scale[:, None] * stats.h_los)
