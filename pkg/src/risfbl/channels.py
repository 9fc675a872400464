"""Channel generation: geometry, path loss, Rician fading, cascaded channels.

The collector node (CN) is reached only through the RIS; the direct
sensor-to-CN channel is fixed to zero. Each cascaded channel is the
elementwise product of the RIS-to-CN channel with the sensor-to-RIS channel,
and the per-sensor lifted matrices P_i * h_i h_i^H are precomputed for the
solvers that work on quadratic forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .validation import as_rng

# Sensors drawn closer than this to the RIS are evaluated at the reference
# distance, keeping the power-law gain bounded.
MIN_SENSOR_DISTANCE = 1.0


def most_square_factors(n: int) -> tuple[int, int]:
    """Factor n into the most-square (rows, cols) pair, rows >= cols."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cols = int(math.isqrt(n))
    while n % cols != 0:
        cols -= 1
    return n // cols, cols


def upa_steering(l_x: int, l_y: int, azimuth: float, elevation: float,
                 spacing: float = 0.5) -> np.ndarray:
    """Steering vector of an l_x-by-l_y planar array, flattened row-major.

    Entry (m, n) carries phase 2*pi*spacing*(m*sin(el)*cos(az) + n*sin(el)*sin(az)).
    """
    if l_x < 1 or l_y < 1:
        raise ValueError(f"array dimensions must be >= 1, got {l_x}x{l_y}")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    m = np.arange(l_x)[:, None]
    n = np.arange(l_y)[None, :]
    phase = 2.0 * np.pi * spacing * (m * math.sin(elevation) * math.cos(azimuth)
                                     + n * math.sin(elevation) * math.sin(azimuth))
    return np.exp(1j * phase).reshape(-1)


def path_loss(distance: float, exponent: float, reference_loss_db: float = 30.0) -> float:
    """Power-law linear gain: 10^(-ref/10) * distance^(-exponent)."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return 10.0 ** (-reference_loss_db / 10.0) * distance ** (-exponent)


def rician_channel(dim: int, K: float, los: np.ndarray, rng, mean_gain: float = 1.0) -> np.ndarray:
    """Draw a Rician channel sqrt(g) * (sqrt(K/(K+1)) los + sqrt(1/(K+1)) w).

    los must have unit-modulus entries (squared norm == dim); w is i.i.d.
    circular complex Gaussian with unit variance per entry, so the expected
    squared norm of the output is mean_gain * dim.
    """
    if K < 0:
        raise ValueError(f"Rician factor must be nonnegative, got {K}")
    if not mean_gain > 0:
        raise ValueError(f"mean_gain must be positive, got {mean_gain}")
    los = np.asarray(los, dtype=complex)
    if los.shape != (dim,):
        raise ValueError(f"los must have shape ({dim},), got {los.shape}")
    if abs(np.sum(np.abs(los) ** 2) - dim) > 1e-6 * dim:
        raise ValueError("los must have unit-modulus entries")
    scatter = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / math.sqrt(2.0)
    return math.sqrt(mean_gain) * (math.sqrt(K / (K + 1.0)) * los
                                   + math.sqrt(1.0 / (K + 1.0)) * scatter)


@dataclass(frozen=True)
class ChannelSet:
    """All channels of one scenario draw.

    ris_cn: (L,) RIS-to-CN channel.
    sensor_ris: (M, L) sensor-to-RIS channels.
    cascade: (M, L) cascaded channels, row i = ris_cn * sensor_ris[i].
    lifted: (M, L, L) Hermitian PSD matrices P_i * cascade_i cascade_i^H.
    powers: (M,) transmit powers in watts.
    cascade_mean_power: (M,) model per-entry mean power of each cascade,
        used to size CSI perturbations.
    direct: (M,) direct sensor-to-CN channels, fixed to zero.
    """

    ris_cn: np.ndarray
    sensor_ris: np.ndarray
    cascade: np.ndarray
    lifted: np.ndarray
    powers: np.ndarray
    cascade_mean_power: np.ndarray
    direct: np.ndarray

    @property
    def num_sensors(self) -> int:
        return self.cascade.shape[0]

    @property
    def num_elements(self) -> int:
        return self.cascade.shape[1]


@dataclass(frozen=True)
class Geometry:
    """Placement backing one scenario draw, kept for replay and audit."""

    cn_distance: float
    sensor_positions: np.ndarray      # (M, 2), meters, RIS at origin
    sensor_distances: np.ndarray      # (M,), clamped at MIN_SENSOR_DISTANCE
    ris_cn_angles: tuple              # (azimuth, elevation) of the CN steering
    sensor_angles: np.ndarray         # (M, 2) azimuth, elevation per sensor
    ris_cn_mean_gain: float
    sensor_mean_gains: np.ndarray     # (M,)


@dataclass(frozen=True)
class Scenario:
    """Channel draw plus the rate-model parameters needed to score it."""

    channels: ChannelSet
    noise_power: float
    blocklengths: np.ndarray
    error_probs: np.ndarray

    @property
    def num_sensors(self) -> int:
        return self.channels.num_sensors

    @property
    def num_elements(self) -> int:
        return self.channels.num_elements

    def with_channels(self, channels: ChannelSet) -> "Scenario":
        return Scenario(channels=channels, noise_power=self.noise_power,
                        blocklengths=self.blocklengths, error_probs=self.error_probs)

    def with_error_probs(self, error_probs) -> "Scenario":
        eps = np.broadcast_to(np.asarray(error_probs, dtype=float), (self.num_sensors,)).copy()
        return Scenario(channels=self.channels, noise_power=self.noise_power,
                        blocklengths=self.blocklengths, error_probs=eps)


def _lifted_matrices(cascade: np.ndarray, powers: np.ndarray) -> np.ndarray:
    return powers[:, None, None] * (cascade[:, :, None] * cascade.conj()[:, None, :])


def build_scenario(config: ScenarioConfig, rng=None) -> tuple[ChannelSet, Geometry]:
    """Draw geometry and channels for one scenario.

    Sensors fall uniformly on a disk around the RIS; steering angles are
    drawn independently of the positions (azimuth in [-pi, pi), elevation in
    [0, pi/2)). Deterministic given (config, rng seed).
    """
    rng = as_rng(config.rng_seed if rng is None else rng)
    M, L = config.num_sensors, config.num_elements
    l_x, l_y = most_square_factors(L)
    powers = config.power_vector()

    theta = rng.uniform(0.0, 2.0 * np.pi, M)
    radius = config.sensor_disk_radius * np.sqrt(rng.uniform(0.0, 1.0, M))
    positions = np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    distances = np.maximum(radius, MIN_SENSOR_DISTANCE)

    cn_az = rng.uniform(-np.pi, np.pi)
    cn_el = rng.uniform(0.0, np.pi / 2.0)
    cn_gain = path_loss(config.ris_cn_distance, config.path_loss_exponent_ris_cn,
                        config.reference_loss_db)
    ris_cn = rician_channel(L, config.rician_K_ris_cn,
                            upa_steering(l_x, l_y, cn_az, cn_el, config.carrier_spacing),
                            rng, cn_gain)

    sensor_angles = np.empty((M, 2))
    sensor_gains = np.empty(M)
    sensor_ris = np.empty((M, L), dtype=complex)
    for i in range(M):
        az = rng.uniform(-np.pi, np.pi)
        el = rng.uniform(0.0, np.pi / 2.0)
        sensor_angles[i] = (az, el)
        sensor_gains[i] = path_loss(distances[i], config.path_loss_exponent_sensor_ris,
                                    config.reference_loss_db)
        sensor_ris[i] = rician_channel(L, config.rician_K_sensor_ris,
                                       upa_steering(l_x, l_y, az, el, config.carrier_spacing),
                                       rng, sensor_gains[i])

    cascade = ris_cn[None, :] * sensor_ris
    channels = ChannelSet(
        ris_cn=ris_cn,
        sensor_ris=sensor_ris,
        cascade=cascade,
        lifted=_lifted_matrices(cascade, powers),
        powers=powers,
        cascade_mean_power=cn_gain * sensor_gains,
        direct=np.zeros(M, dtype=complex),
    )
    geometry = Geometry(
        cn_distance=config.ris_cn_distance,
        sensor_positions=positions,
        sensor_distances=distances,
        ris_cn_angles=(cn_az, cn_el),
        sensor_angles=sensor_angles,
        ris_cn_mean_gain=cn_gain,
        sensor_mean_gains=sensor_gains,
    )
    return channels, geometry


def make_scenario(config: ScenarioConfig, rng=None) -> tuple[Scenario, Geometry]:
    """Build a Scenario bundle (channels plus rate-model parameters)."""
    channels, geometry = build_scenario(config, rng)
    scenario = Scenario(
        channels=channels,
        noise_power=float(config.noise_power),
        blocklengths=config.blocklength_vector(),
        error_probs=config.error_prob_vector(),
    )
    return scenario, geometry


def perturb_csi(channels: ChannelSet, beta: float, rng) -> ChannelSet:
    """Contaminate the cascaded channels with an i.i.d. complex Gaussian error.

    The per-entry error variance is beta times the model per-entry mean power
    of the cascade (a diagonal covariance surrogate). beta = 0 returns an
    identical copy. The factor channels (ris_cn, sensor_ris) are left as the
    true values; the cascade product identity no longer holds for beta > 0.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    rng = as_rng(rng)
    M, L = channels.cascade.shape
    if beta == 0.0:
        noisy = channels.cascade.copy()
    else:
        std = np.sqrt(beta * channels.cascade_mean_power / 2.0)
        noise = (rng.standard_normal((M, L)) + 1j * rng.standard_normal((M, L))) * std[:, None]
        noisy = channels.cascade + noise
    return ChannelSet(
        ris_cn=channels.ris_cn.copy(),
        sensor_ris=channels.sensor_ris.copy(),
        cascade=noisy,
        lifted=_lifted_matrices(noisy, channels.powers),
        powers=channels.powers.copy(),
        cascade_mean_power=channels.cascade_mean_power.copy(),
        direct=channels.direct.copy(),
    )


# -- scenario files ---------------------------------------------------------

def save_scenario(path, scenario: Scenario, geometry: Geometry | None = None,
                  config: ScenarioConfig | None = None) -> None:
    """Dump a scenario to a portable .npz bundle (complex data as re/im pairs)."""
    ch = scenario.channels
    arrays = {
        "ris_cn_re": ch.ris_cn.real, "ris_cn_im": ch.ris_cn.imag,
        "sensor_ris_re": ch.sensor_ris.real, "sensor_ris_im": ch.sensor_ris.imag,
        "cascade_re": ch.cascade.real, "cascade_im": ch.cascade.imag,
        "powers": ch.powers,
        "cascade_mean_power": ch.cascade_mean_power,
        "noise_power": np.float64(scenario.noise_power),
        "blocklengths": scenario.blocklengths,
        "error_probs": scenario.error_probs,
    }
    if geometry is not None:
        arrays.update(
            geo_cn_distance=np.float64(geometry.cn_distance),
            geo_sensor_positions=geometry.sensor_positions,
            geo_sensor_distances=geometry.sensor_distances,
            geo_ris_cn_angles=np.asarray(geometry.ris_cn_angles),
            geo_sensor_angles=geometry.sensor_angles,
            geo_ris_cn_mean_gain=np.float64(geometry.ris_cn_mean_gain),
            geo_sensor_mean_gains=geometry.sensor_mean_gains,
        )
    if config is not None:
        import json
        arrays["config_json"] = np.str_(json.dumps(config.to_dict(), sort_keys=True))
    np.savez(path, **arrays)


def load_scenario(path):
    """Load a scenario bundle; returns (Scenario, Geometry | None, ScenarioConfig | None)."""
    with np.load(path, allow_pickle=False) as data:
        ris_cn = data["ris_cn_re"] + 1j * data["ris_cn_im"]
        sensor_ris = data["sensor_ris_re"] + 1j * data["sensor_ris_im"]
        cascade = data["cascade_re"] + 1j * data["cascade_im"]
        powers = data["powers"]
        channels = ChannelSet(
            ris_cn=ris_cn,
            sensor_ris=sensor_ris,
            cascade=cascade,
            lifted=_lifted_matrices(cascade, powers),
            powers=powers,
            cascade_mean_power=data["cascade_mean_power"],
            direct=np.zeros(cascade.shape[0], dtype=complex),
        )
        scenario = Scenario(
            channels=channels,
            noise_power=float(data["noise_power"]),
            blocklengths=data["blocklengths"],
            error_probs=data["error_probs"],
        )
        geometry = None
        if "geo_sensor_positions" in data:
            geometry = Geometry(
                cn_distance=float(data["geo_cn_distance"]),
                sensor_positions=data["geo_sensor_positions"],
                sensor_distances=data["geo_sensor_distances"],
                ris_cn_angles=tuple(data["geo_ris_cn_angles"]),
                sensor_angles=data["geo_sensor_angles"],
                ris_cn_mean_gain=float(data["geo_ris_cn_mean_gain"]),
                sensor_mean_gains=data["geo_sensor_mean_gains"],
            )
        cfg = None
        if "config_json" in data:
            import json
            cfg = ScenarioConfig.from_dict(json.loads(str(data["config_json"])))
    return scenario, geometry, cfg
