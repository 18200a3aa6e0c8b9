"""Unit conversions and physical constants shared across the package.

All internal computation is in linear SI units; decibel values only appear
at configuration boundaries.
"""

import numpy as np

BOLTZMANN = 1.380649e-23  # J/K
SPEED_OF_LIGHT = 299792458.0  # m/s
EARTH_RADIUS = 6371e3  # m, spherical Earth model


def db_to_linear(x_db):
    """Convert a power ratio from dB to linear scale."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a linear power ratio to dB."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))
