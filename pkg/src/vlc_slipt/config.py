"""Physical parameters, QoS targets, and scenario configuration.

Internal unit convention: SI everywhere (amperes, watts, volts, meters,
hertz, bits/s).  Config files may give selected keys in mA / mV / uJ for
readability; they are converted on ingestion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class ConfigError(ValueError):
    """Raised for malformed configuration files or invalid values."""


@dataclass(frozen=True)
class PhysParams:
    """Physical constants of the LEDs, photodiodes and receivers.

    All currents in A, voltages in V, areas in m^2, angles in degrees.
    ``led_power`` is the LED electrical-to-optical power factor (W/A),
    ``conv_factor`` the photodiode optical-to-electric conversion (A/W).
    ``wall_reflectance`` and ``conv_factor`` are distinct quantities and
    never assumed equal.
    """

    bandwidth_hz: float = 20e6
    pd_area_iu: float = 1e-5          # 0.1 cm^2
    pd_area_ehu: float = 0.04         # solar-panel sized receiver
    optical_filter_gain: float = 1.0
    half_intensity_angle_deg: float = 60.0
    fov_semi_angle_deg: float = 55.0
    conv_factor: float = 0.53         # A/W
    refractive_index: float = 1.5
    bias_max: float = 12e-3           # A, top of the LED linear region
    bias_min: float = 0.0             # A, bottom of the LED linear region
    fill_factor: float = 0.75
    led_power: float = 10.0           # W/A
    thermal_voltage: float = 25e-3    # V
    dark_current: float = 1e-10       # A
    noise_psd: float = 1e-22          # A^2/Hz
    wall_reflectance: float = 0.8
    wall_patch_edge: float = 0.25     # m

    def __post_init__(self):
        positive = [
            "bandwidth_hz", "pd_area_iu", "pd_area_ehu", "optical_filter_gain",
            "conv_factor", "refractive_index", "bias_max", "fill_factor",
            "led_power", "thermal_voltage", "dark_current", "noise_psd",
            "wall_patch_edge",
        ]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.bias_min < 0:
            raise ConfigError("bias_min must be >= 0")
        if self.bias_min >= self.bias_max:
            raise ConfigError("bias_min must be below bias_max")
        if not 0.0 < self.half_intensity_angle_deg < 90.0:
            raise ConfigError("half_intensity_angle_deg must lie in (0, 90)")
        if not 0.0 < self.fov_semi_angle_deg < 90.0:
            raise ConfigError("fov_semi_angle_deg must lie in (0, 90)")
        if not 0.0 <= self.wall_reflectance <= 1.0:
            raise ConfigError("wall_reflectance must lie in [0, 1]")

    @property
    def lambertian_order(self) -> float:
        return -1.0 / math.log2(math.cos(math.radians(self.half_intensity_angle_deg)))

    @property
    def rate_prefactor(self) -> float:
        """Half the modulation bandwidth; prefactor of the rate bound."""
        return 0.5 * self.bandwidth_hz

    @property
    def snr_coeff(self) -> float:
        """Per-watt SNR coefficient of the achievable-rate lower bound.

        Includes the squared LED power factor so that the rate bound and
        the minimum-power inverse are exact inverses of each other (the
        transmitted optical signal is led_power times the electrical one).
        """
        return (math.e * self.conv_factor ** 2 * self.led_power ** 2
                / (2.0 * math.pi * self.bandwidth_hz * self.noise_psd))

    @property
    def bias_mid(self) -> float:
        """Lowest admissible DC bias: midpoint of the linear region."""
        return 0.5 * (self.bias_max + self.bias_min)

    @property
    def p_max(self) -> float:
        """Per-AP cap on electrical message power at maximum modulation depth."""
        return (self.led_power * 0.5 * (self.bias_max - self.bias_min)) ** 2


@dataclass(frozen=True, eq=False)
class QosSpec:
    """Per-user service targets and objective weights.

    ``alpha`` in [0, 1] trades the sum-rate utility against the harvested
    energy utility; ``omega`` rescales the energy term so both utilities
    have comparable magnitude.
    """

    rate_thresholds: np.ndarray      # bits/s, one per information user
    energy_thresholds: np.ndarray    # W (per-second energy), one per EHU
    alpha: float = 0.5
    omega: float = 12e3

    def __post_init__(self):
        object.__setattr__(self, "rate_thresholds",
                           np.atleast_1d(np.asarray(self.rate_thresholds, dtype=float)))
        object.__setattr__(self, "energy_thresholds",
                           np.atleast_1d(np.asarray(self.energy_thresholds, dtype=float)))
        if np.any(self.rate_thresholds < 0) or np.any(self.energy_thresholds < 0):
            raise ConfigError("QoS thresholds must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.omega <= 0:
            raise ConfigError("omega must be positive")


# Config file schema: file key -> (attribute path, parser, scale factor).
# Keys with unit suffixes are converted to SI on ingestion.
def _floats(text):
    return [float(tok) for tok in str(text).replace(",", " ").split()]


_PHYS_KEYS = {
    "bandwidth_hz": ("bandwidth_hz", float, 1.0),
    "pd_area_iu_m2": ("pd_area_iu", float, 1.0),
    "pd_area_ehu_m2": ("pd_area_ehu", float, 1.0),
    "optical_filter_gain": ("optical_filter_gain", float, 1.0),
    "half_intensity_angle_deg": ("half_intensity_angle_deg", float, 1.0),
    "conv_factor_a_per_w": ("conv_factor", float, 1.0),
    "refractive_index": ("refractive_index", float, 1.0),
    "bias_max_ma": ("bias_max", float, 1e-3),
    "bias_min_ma": ("bias_min", float, 1e-3),
    "fill_factor": ("fill_factor", float, 1.0),
    "led_power_w_per_a": ("led_power", float, 1.0),
    "thermal_voltage_mv": ("thermal_voltage", float, 1e-3),
    "dark_current_a": ("dark_current", float, 1.0),
    "noise_psd_a2hz": ("noise_psd", float, 1.0),
    "wall_reflectance": ("wall_reflectance", float, 1.0),
    "wall_patch_edge_m": ("wall_patch_edge", float, 1.0),
}

_SCENARIO_KEYS = {
    "room_x_m": ("room_x", float, 1.0),
    "room_y_m": ("room_y", float, 1.0),
    "room_z_m": ("room_z", float, 1.0),
    "user_height_m": ("user_height", float, 1.0),
    "ap_rows": ("ap_rows", int, 1),
    "ap_cols": ("ap_cols", int, 1),
    "n_iu": ("n_iu", int, 1),
    "n_ehu": ("n_ehu", int, 1),
    "fov_deg": ("fov_list", _floats, 1.0),
    "alpha": ("alpha_list", _floats, 1.0),
    "eta": ("eta_list", _floats, 1.0),
    "rate_threshold_bps": ("rate_threshold", float, 1.0),
    "energy_threshold_uj": ("energy_threshold", float, 1e-6),
    "omega": ("omega", float, 1.0),
    "trials": ("trials", int, 1),
    "seed": ("seed", int, 1),
    "algorithm": ("algorithm", str, None),
    "out": ("out", str, None),
    "solver_tol": ("solver_tol", float, 1.0),
    "solver_max_iter": ("solver_max_iter", int, 1),
    "oracle_grid_points": ("oracle_grid_points", int, 1),
}

ALGORITHMS = ("iterative", "baseline", "oracle", "all")


@dataclass
class ScenarioConfig:
    """Full description of one simulated scenario.

    Table-style defaults: an 8 x 8 x 3 m room, a 4 x 4 ceiling AP lattice,
    5 information users and 5 energy-harvesting users at 0.85 m height.
    """

    phys: PhysParams = field(default_factory=PhysParams)
    room_x: float = 8.0
    room_y: float = 8.0
    room_z: float = 3.0
    user_height: float = 0.85
    ap_rows: int = 4
    ap_cols: int = 4
    n_iu: int = 5
    n_ehu: int = 5
    fov_list: list = field(default_factory=lambda: [45.0, 55.0])
    alpha_list: list = field(default_factory=lambda: [round(0.1 * k, 1) for k in range(11)])
    eta_list: list = field(default_factory=lambda: [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    rate_threshold: float = 10e6     # bits/s
    energy_threshold: float = 1e-6   # W (1 uJ per second)
    omega: float = 12e3
    trials: int = 100
    seed: int = 1
    algorithm: str = "all"
    out: str = ""
    solver_tol: float = 1e-6
    solver_max_iter: int = 200
    oracle_grid_points: int = 200

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if any(not 0.0 <= a <= 1.0 for a in self.alpha_list):
            raise ConfigError("alpha values must lie in [0, 1]")
        if any(not 0.0 <= e <= 1.0 for e in self.eta_list):
            raise ConfigError("eta values must lie in [0, 1]")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if self.n_iu < 0 or self.n_ehu < 0 or self.n_iu + self.n_ehu == 0:
            raise ConfigError("need at least one user and nonnegative counts")
        if self.n_iu >= self.ap_rows * self.ap_cols:
            raise ConfigError("number of IUs must be below the number of APs")

    @property
    def n_users(self) -> int:
        return self.n_iu + self.n_ehu

    @property
    def room_dims(self):
        return (self.room_x, self.room_y, self.room_z)

    def phys_at(self, fov_deg=None) -> PhysParams:
        """Physical parameters, optionally at a different FoV semi-angle."""
        fov = self.fov_list[0] if fov_deg is None else float(fov_deg)
        return replace(self.phys, fov_semi_angle_deg=fov)

    def qos_at(self, alpha=None, n_iu=None, n_ehu=None) -> QosSpec:
        """QoS spec with uniform thresholds for the given user counts."""
        n_iu = self.n_iu if n_iu is None else n_iu
        n_ehu = self.n_ehu if n_ehu is None else n_ehu
        a = self.alpha_list[0] if alpha is None else float(alpha)
        return QosSpec(
            rate_thresholds=np.full(n_iu, self.rate_threshold),
            energy_thresholds=np.full(n_ehu, self.energy_threshold),
            alpha=a,
            omega=self.omega,
        )


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse flat ``key = value`` configuration text.

    Unknown keys are rejected rather than ignored, so typos fail loudly.
    """
    phys_kwargs = {}
    scen_kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _PHYS_KEYS:
            attr, parser, scale = _PHYS_KEYS[key]
            try:
                phys_kwargs[attr] = parser(value) * scale
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}") from exc
        elif key in _SCENARIO_KEYS:
            attr, parser, scale = _SCENARIO_KEYS[key]
            try:
                parsed = parser(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}") from exc
            if scale not in (None, 1, 1.0):
                parsed = (parsed * scale if not isinstance(parsed, list)
                          else [v * scale for v in parsed])
            scen_kwargs[attr] = parsed
        else:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
    phys = PhysParams(**phys_kwargs)
    return ScenarioConfig(phys=phys, **scen_kwargs)


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
