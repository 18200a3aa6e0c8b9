"""Scenario configuration: flat key-value files with audited defaults.

The file format is deliberately plain so experiment setups diff cleanly:
one ``key = value`` per line, ``#`` comments, unknown keys rejected.
Decibel quantities stay in dB here and are converted to linear scale at
the point of use. Defaults reproduce the reference scenario (30 dBW,
225 atoms on 4 layers, 9 antennas serving 9 users at 4 GHz from 1000 km).
"""

import dataclasses
import math
from dataclasses import dataclass, field

from .channel import DEFAULT_RICIAN_TABLES_DB
from .optimizer import AOSettings
from .propagation import SimGeometry
from .units import SPEED_OF_LIGHT, db_to_linear

__all__ = ["ConfigError", "ScenarioConfig", "parse_config", "load_config", "SWEEP_AXES"]

SWEEP_AXES = (
    "num_layers",
    "atoms_per_layer",
    "num_antennas",
    "total_power_dbw",
    "total_users",
    "users_per_group",
)

_GROUPING_METHODS = ("greedy", "random")
_SELECTION_METHODS = ("leakage", "random", "identity")
_PHASE_METHODS = ("gradient", "none")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name, message):
        super().__init__(f"config field '{field_name}': {message}")
        self.field = field_name


@dataclass
class ScenarioConfig:
    total_power_dbw: float = 30.0
    atoms_per_layer: int = 225
    num_layers: int = 4
    num_antennas: int = 9
    users_per_group: int = 9
    total_users: int = 9
    carrier_frequency_hz: float = 4e9
    tx_gain_dbi: float = 6.0
    rx_gain_dbi: float = 0.0
    bandwidth_hz: float = 50e6
    noise_temperature_k: float = 290.0
    altitude_m: float = 1000e3
    service_diameter_m: float = 600e3
    environment: str = "suburban"
    rician_tables: dict = field(
        default_factory=lambda: {k: v for k, v in DEFAULT_RICIAN_TABLES_DB.items()}
    )
    atom_pitch_wavelengths: float = 0.5
    antenna_spacing_wavelengths: float = 1.0
    sim_thickness_wavelengths: float = 5.0
    grouping_method: str = "greedy"
    selection_method: str = "leakage"
    selection_draws: int = 10
    phase_optimization: str = "gradient"
    ao_max_outer: int = 200
    ao_tol: float = 1e-4
    ao_power_sweeps: int = 5
    armijo_mu0: float = 1.0
    armijo_shrink: float = 0.5
    armijo_c: float = 1e-4
    armijo_max_halvings: int = 30
    trials: int = 20
    mc_draws: int = 1000
    master_seed: int = 1
    sweep_axis: str = "none"
    sweep_values: tuple = ()

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_frequency_hz

    @property
    def total_power_watts(self):
        return float(db_to_linear(self.total_power_dbw))

    def geometry(self):
        lam = self.wavelength
        return SimGeometry(
            wavelength=lam,
            num_layers=self.num_layers,
            atoms_per_layer=self.atoms_per_layer,
            num_antennas=self.num_antennas,
            atom_pitch=self.atom_pitch_wavelengths * lam,
            antenna_spacing=self.antenna_spacing_wavelengths * lam,
            thickness=self.sim_thickness_wavelengths * lam,
        )

    def ao_settings(self):
        return AOSettings(
            max_outer=self.ao_max_outer,
            tol=self.ao_tol,
            power_sweeps=self.ao_power_sweeps,
            armijo_mu0=self.armijo_mu0,
            armijo_shrink=self.armijo_shrink,
            armijo_c=self.armijo_c,
            armijo_max_halvings=self.armijo_max_halvings,
            optimize_phases=self.phase_optimization == "gradient",
        )

    def scenario_kwargs(self):
        """Keyword arguments for ``channel.sample_scenario``."""
        return dict(
            env=self.environment,
            altitude=self.altitude_m,
            service_diameter=self.service_diameter_m,
            tx_gain_dbi=self.tx_gain_dbi,
            rx_gain_dbi=self.rx_gain_dbi,
            bandwidth=self.bandwidth_hz,
            noise_temperature=self.noise_temperature_k,
            rician_tables=self.rician_tables,
        )

    def with_value(self, axis, value):
        """Copy of this config with one sweep axis replaced, re-validated."""
        if axis not in SWEEP_AXES:
            raise ConfigError("sweep_axis", f"{axis!r} is not sweepable")
        if axis in _INT_KEYS:
            if float(value) != int(value):
                raise ConfigError("sweep_values", f"{axis} needs integers, got {value!r}")
            value = int(value)
        cfg = dataclasses.replace(self, **{axis: value})
        cfg.validate()
        return cfg

    def validate(self):
        for key in ("atoms_per_layer", "num_antennas"):
            count = getattr(self, key)
            if count < 1 or math.isqrt(count) ** 2 != count:
                raise ConfigError(key, f"must be a positive perfect square, got {count}")
        positive = (
            "carrier_frequency_hz",
            "bandwidth_hz",
            "noise_temperature_k",
            "altitude_m",
            "service_diameter_m",
            "atom_pitch_wavelengths",
            "antenna_spacing_wavelengths",
            "sim_thickness_wavelengths",
            "ao_tol",
            "armijo_mu0",
        )
        for key in positive:
            if getattr(self, key) <= 0:
                raise ConfigError(key, "must be positive")
        at_least_one = (
            "num_layers",
            "users_per_group",
            "total_users",
            "selection_draws",
            "ao_max_outer",
            "ao_power_sweeps",
            "trials",
            "mc_draws",
        )
        for key in at_least_one:
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be >= 1")
        if not 0.0 < self.armijo_shrink < 1.0:
            raise ConfigError("armijo_shrink", "must lie in (0, 1)")
        if self.users_per_group > self.num_antennas:
            raise ConfigError(
                "users_per_group",
                f"{self.users_per_group} users per group exceed "
                f"{self.num_antennas} antennas",
            )
        if self.environment not in self.rician_tables:
            raise ConfigError(
                "environment",
                f"{self.environment!r} has no Rician table; "
                f"have {sorted(self.rician_tables)}",
            )
        if self.grouping_method not in _GROUPING_METHODS:
            raise ConfigError("grouping_method", f"must be one of {_GROUPING_METHODS}")
        if self.selection_method not in _SELECTION_METHODS:
            raise ConfigError("selection_method", f"must be one of {_SELECTION_METHODS}")
        if self.phase_optimization not in _PHASE_METHODS:
            raise ConfigError("phase_optimization", f"must be one of {_PHASE_METHODS}")
        if self.sweep_axis != "none":
            if self.sweep_axis not in SWEEP_AXES:
                raise ConfigError(
                    "sweep_axis", f"must be 'none' or one of {SWEEP_AXES}"
                )
            if not self.sweep_values:
                raise ConfigError("sweep_values", "required when sweep_axis is set")
        return self


_INT_KEYS = {
    "atoms_per_layer",
    "num_layers",
    "num_antennas",
    "users_per_group",
    "total_users",
    "selection_draws",
    "ao_max_outer",
    "ao_power_sweeps",
    "armijo_max_halvings",
    "trials",
    "mc_draws",
    "master_seed",
}
_FLOAT_KEYS = {
    "total_power_dbw",
    "carrier_frequency_hz",
    "tx_gain_dbi",
    "rx_gain_dbi",
    "bandwidth_hz",
    "noise_temperature_k",
    "altitude_m",
    "service_diameter_m",
    "atom_pitch_wavelengths",
    "antenna_spacing_wavelengths",
    "sim_thickness_wavelengths",
    "ao_tol",
    "armijo_mu0",
    "armijo_shrink",
    "armijo_c",
}
_STR_KEYS = {
    "environment",
    "grouping_method",
    "selection_method",
    "phase_optimization",
    "sweep_axis",
}


def _parse_rician_table(key, text):
    points = []
    for chunk in text.split(","):
        try:
            elev, kdb = chunk.split(":")
            points.append((float(elev), float(kdb)))
        except ValueError:
            raise ConfigError(key, f"expected 'deg:dB' pairs, got {chunk!r}") from None
    if not points:
        raise ConfigError(key, "table is empty")
    if sorted(p[0] for p in points) != [p[0] for p in points]:
        raise ConfigError(key, "elevations must be increasing")
    return tuple(points)


def _parse_sweep_values(axis_key, text):
    values = []
    for chunk in text.replace(",", " ").split():
        try:
            values.append(float(chunk))
        except ValueError:
            raise ConfigError("sweep_values", f"not a number: {chunk!r}") from None
    return tuple(values)


def parse_config(text):
    """Parse flat ``key = value`` text into a validated ScenarioConfig."""
    cfg = ScenarioConfig()
    cfg.rician_tables = dict(cfg.rician_tables)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _INT_KEYS:
            try:
                setattr(cfg, key, int(value))
            except ValueError:
                raise ConfigError(key, f"expected an integer, got {value!r}") from None
        elif key in _FLOAT_KEYS:
            try:
                setattr(cfg, key, float(value))
            except ValueError:
                raise ConfigError(key, f"expected a number, got {value!r}") from None
        elif key in _STR_KEYS:
            setattr(cfg, key, value)
        elif key == "sweep_values":
            cfg.sweep_values = _parse_sweep_values(key, value)
        elif key.startswith("rician_table_"):
            cfg.rician_tables[key.removeprefix("rician_table_")] = _parse_rician_table(
                key, value
            )
        else:
            raise ConfigError(key, "unknown key")
    cfg.validate()
    return cfg


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
