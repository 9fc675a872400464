"""Initialization heuristics for the reflection-vector solvers.

Random unit-modulus phases remain the default restart strategy; the
structured starts below give the first restart a sensible operating point.
Max-min under a fixed decoding order needs received powers that decay
geometrically along the order, which random phases essentially never
produce, so local ascent from them stalls at zero rate. The balanced start
solves a least-squares problem for exactly that power profile. For weighted
sum rates, aligning the surface to one sensor's cascaded channel is the
classic single-beam operating point.
"""
from __future__ import annotations

import numpy as np

from .channels import Scenario
from .rates import objective_value


def random_phases(L: int, rng) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, L))


def aligned_start(scenario: Scenario, sensor: int | None = None) -> np.ndarray:
    """Unit-modulus vector phase-matched to one sensor's cascaded channel.

    Defaults to the sensor with the strongest mean received power.
    """
    h = scenario.channels.cascade
    if sensor is None:
        sensor = int(np.argmax(scenario.channels.powers * np.sum(np.abs(h) ** 2, axis=1)))
    return np.exp(-1j * np.angle(h[sensor]))


def balanced_start(scenario: Scenario, targets=(0.1, 0.3, 1.0, 3.0, 10.0, 30.0)) -> np.ndarray:
    """Feasible vector aiming at a geometric received-power cascade.

    For each trial SINR rho the least-squares reflection vector hitting the
    balanced levels q_i = rho (1+rho)^(M-1-i) sigma^2 is built, scaled into
    the feasible set, and the candidate with the best true minimum rate is
    returned.
    """
    h = scenario.channels.cascade
    M = scenario.num_sensors
    noise = scenario.noise_power
    powers = scenario.channels.powers
    best = None
    for rho in targets:
        q = rho * (1.0 + rho) ** np.arange(M - 1, -1, -1) * noise
        psi, *_ = np.linalg.lstsq(h, np.sqrt(q / powers).astype(complex), rcond=None)
        peak = np.abs(psi).max()
        if peak > 1.0:
            psi = psi / peak
        value = objective_value(psi, scenario, "min_rate", clamp=False)
        if best is None or value > best[0]:
            best = (value, psi)
    return best[1]


def initial_points(scenario: Scenario, objective: str, count: int, rng) -> list:
    """First restart structured by objective, the rest uniform random phases."""
    points = []
    if count >= 1:
        points.append(balanced_start(scenario) if objective == "min_rate"
                      else aligned_start(scenario))
    while len(points) < count:
        points.append(random_phases(scenario.num_elements, rng))
    return points
