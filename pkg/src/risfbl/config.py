"""Scenario configuration: all physical and algorithmic knobs, plus file I/O.

Every quantity that shapes the physical model lives here so that nothing is
hardcoded in the channel generator. Powers are watts, distances meters,
Rician factors linear, blocklengths symbols.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .validation import check_per_sensor, check_positive_int, check_probability, check_weights

WEIGHTS_MODES = ("equal", "fairness", "explicit")


def thermal_noise_power(density_dbm_hz: float = -174.0, bandwidth_hz: float = 1.08e6) -> float:
    """Noise power N0 * B in watts for a given density (dBm/Hz) and bandwidth."""
    return 10.0 ** (density_dbm_hz / 10.0) * 1e-3 * bandwidth_hz


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and statistical parameters of one uplink scenario.

    Defaults: 0 dBm transmit power per sensor, thermal noise over 1.08 MHz,
    100-symbol packets at error probability 1e-3, sensors on a 10 m disk
    around the RIS, a 50 m RIS-to-collector hop, Rician factors 10 (RIS-CN)
    and 1 (sensor-RIS), and power-law path loss with 30 dB loss at 1 m.
    """

    num_sensors: int = 10
    num_elements: int = 64
    transmit_powers: float | tuple = 1e-3
    noise_power: float = thermal_noise_power()
    blocklengths: float | tuple = 100
    error_probs: float | tuple = 1e-3
    weights_mode: str = "equal"
    explicit_weights: tuple | None = None
    ris_cn_distance: float = 50.0
    sensor_disk_radius: float = 10.0
    rician_K_ris_cn: float = 10.0
    rician_K_sensor_ris: float = 1.0
    path_loss_exponent_ris_cn: float = 2.2
    path_loss_exponent_sensor_ris: float = 3.67
    reference_loss_db: float = 30.0
    carrier_spacing: float = 0.5
    csi_error_beta: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        check_positive_int(self.num_sensors, "num_sensors")
        check_positive_int(self.num_elements, "num_elements")
        M = self.num_sensors
        powers = check_per_sensor(self.transmit_powers, M, "transmit_powers")
        if np.any(powers <= 0):
            raise ValueError("transmit_powers must be positive")
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be positive, got {self.noise_power}")
        blocklengths = check_per_sensor(self.blocklengths, M, "blocklengths")
        if np.any(blocklengths < 1):
            raise ValueError("blocklengths must be >= 1")
        eps = check_per_sensor(self.error_probs, M, "error_probs")
        for e in eps:
            check_probability(e, "error_probs", upper=0.5)
        if self.weights_mode not in WEIGHTS_MODES:
            raise ValueError(f"weights_mode must be one of {WEIGHTS_MODES}, got {self.weights_mode!r}")
        if self.weights_mode == "explicit":
            if self.explicit_weights is None:
                raise ValueError("explicit_weights required when weights_mode='explicit'")
            check_weights(self.explicit_weights, M)
        if not 0.0 <= self.csi_error_beta <= 1.0:
            raise ValueError(f"csi_error_beta must lie in [0, 1], got {self.csi_error_beta}")
        for name in ("ris_cn_distance", "sensor_disk_radius", "carrier_spacing",
                     "path_loss_exponent_ris_cn", "path_loss_exponent_sensor_ris"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("rician_K_ris_cn", "rician_K_sensor_ris"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    # -- per-sensor arrays -------------------------------------------------

    def power_vector(self) -> np.ndarray:
        return check_per_sensor(self.transmit_powers, self.num_sensors, "transmit_powers")

    def blocklength_vector(self) -> np.ndarray:
        return check_per_sensor(self.blocklengths, self.num_sensors, "blocklengths")

    def error_prob_vector(self) -> np.ndarray:
        return check_per_sensor(self.error_probs, self.num_sensors, "error_probs")

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("transmit_powers", "blocklengths", "error_probs", "explicit_weights"):
            value = out[key]
            if isinstance(value, tuple):
                out[key] = list(value)
            elif isinstance(value, np.ndarray):
                out[key] = value.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("transmit_powers", "blocklengths", "error_probs", "explicit_weights"):
            if key in data and isinstance(data[key], list):
                data[key] = tuple(data[key])
        return cls(**data)

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)
