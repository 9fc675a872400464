import numpy as np
import pytest

from risfbl.channels import ChannelSet, Scenario


def synthetic_scenario(rng, num_sensors, num_elements, noise_power=1.0,
                       blocklength=100.0, eps=1e-3, power_range=(0.5, 2.0)):
    """O(1)-scale random scenario for numeric tests, bypassing the geometry."""
    cascade = (rng.standard_normal((num_sensors, num_elements))
               + 1j * rng.standard_normal((num_sensors, num_elements))) / np.sqrt(2.0)
    powers = rng.uniform(*power_range, num_sensors)
    lifted = powers[:, None, None] * (cascade[:, :, None] * cascade.conj()[:, None, :])
    channels = ChannelSet(
        ris_cn=np.ones(num_elements, dtype=complex),
        sensor_ris=cascade.copy(),
        cascade=cascade,
        lifted=lifted,
        powers=powers,
        cascade_mean_power=np.ones(num_sensors),
        direct=np.zeros(num_sensors, dtype=complex),
    )
    return Scenario(channels=channels, noise_power=float(noise_power),
                    blocklengths=np.full(num_sensors, float(blocklength)),
                    error_probs=np.full(num_sensors, float(eps)))


def random_ris_vector(rng, num_elements, unit_modulus=False):
    phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, num_elements))
    if unit_modulus:
        return phases
    return rng.uniform(0.2, 1.0, num_elements) * phases


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
