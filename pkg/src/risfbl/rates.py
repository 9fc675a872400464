"""Short-packet rate model: SIC SINRs, capacity, dispersion, rate objectives.

Rates follow the normal approximation R = C(rho) - sqrt(V(rho)/n) * Qinv(eps)
in bits/Hz, with C(x) = log2(1+x) and dispersion V(x) = 2x/(1+x) * log2(e)^2.
Internally the penalty splits as a(n, eps) * delta(rho) with
a = (log2(e)/sqrt(n)) * Qinv(eps) and delta(rho) = sqrt(2 rho / (1 + rho)),
so the log2(e) factor is carried once, by the coefficient.

Optimizers work on the unclamped rate so gradients stay informative at low
SINR; reported rates are clamped at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, Scenario
from .validation import DegenerateWeightsError, check_ris_vector, check_weights

LOG2E = math.log2(math.e)
_SQRT2PI = math.sqrt(2.0 * math.pi)


# -- Gaussian tail ------------------------------------------------------------

def gaussian_q(z: float) -> float:
    """Upper tail of the standard normal, Q(z) = 0.5 * erfc(z / sqrt(2))."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def q_inv(eps: float) -> float:
    """Inverse Gaussian Q-function, accurate to well below 1e-8.

    Initial guess from the classic rational tail approximation, polished by
    Newton steps on Q(z) - eps until the update stalls.
    """
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if eps == 0.5:
        return 0.0
    if eps > 0.5:
        return -q_inv(1.0 - eps)
    t = math.sqrt(-2.0 * math.log(eps))
    z = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (
        1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t ** 3)
    for _ in range(4):
        pdf = math.exp(-0.5 * z * z) / _SQRT2PI
        step = (gaussian_q(z) - eps) / pdf
        z += step
        if abs(step) < 1e-13 * max(abs(z), 1.0):
            break
    return z


# -- scalar rate pieces --------------------------------------------------------

def capacity(rho):
    """Channel capacity log2(1 + rho) in bits/Hz."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("SINR must be nonnegative")
    out = np.log1p(rho) * LOG2E
    return float(out) if out.ndim == 0 else out


def dispersion(rho):
    """Channel dispersion 2 rho (1 + rho)^-1 log2(e)^2 in squared bits."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("SINR must be nonnegative")
    out = 2.0 * rho / (1.0 + rho) * LOG2E ** 2
    return float(out) if out.ndim == 0 else out


def penalty_shape(rho):
    """sqrt(2 rho / (1 + rho)): the SINR-dependent factor of the penalty."""
    rho = np.asarray(rho, dtype=float)
    out = np.sqrt(2.0 * rho / (1.0 + rho))
    return float(out) if out.ndim == 0 else out


def penalty_coeff(n, eps) -> float:
    """Blocklength penalty coefficient (log2(e) / sqrt(n)) * Qinv(eps)."""
    n = float(n)
    if n < 1:
        raise ValueError(f"blocklength must be >= 1, got {n}")
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return LOG2E / math.sqrt(n) * q_inv(eps)


def fblr_rate(rho, n, eps, clamp: bool = True):
    """Finite-blocklength rate C(rho) - sqrt(V(rho)/n) * Qinv(eps), in bits/Hz.

    Clamped at zero by default; pass clamp=False for the raw smooth value.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("SINR must be nonnegative")
    eps = float(eps)
    if not 0.0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 0.5], got {eps}")
    raw = capacity(rho) - penalty_coeff(n, eps) * penalty_shape(rho)
    out = np.maximum(raw, 0.0) if clamp else raw
    return float(out) if np.ndim(out) == 0 else out


# -- SINR under SIC -------------------------------------------------------------

def signal_powers(psi: np.ndarray, channels: ChannelSet) -> np.ndarray:
    """Received signal powers P_i |psi^T h_i|^2 for all sensors."""
    inner = channels.cascade @ psi
    return channels.powers * np.abs(inner) ** 2


def sinr_all(psi: np.ndarray, channels: ChannelSet, noise_power: float) -> np.ndarray:
    """SINRs under SIC with the fixed decoding order 0..M-1.

    Sensor i sees interference only from the not-yet-decoded sensors j > i.
    """
    sig = signal_powers(psi, channels)
    tail = np.concatenate([np.cumsum(sig[::-1])[::-1][1:], [0.0]])
    return sig / (noise_power + tail)


def sinr(psi: np.ndarray, channels: ChannelSet, noise_power: float, sensor: int) -> float:
    """SINR of one sensor (0-based index into the decoding order)."""
    M = channels.num_sensors
    if not 0 <= sensor < M:
        raise ValueError(f"sensor index must lie in [0, {M}), got {sensor}")
    return float(sinr_all(psi, channels, noise_power)[sensor])


# -- per-scenario evaluation -----------------------------------------------------

def penalty_coeffs(scenario: Scenario) -> np.ndarray:
    return np.array([penalty_coeff(n, e)
                     for n, e in zip(scenario.blocklengths, scenario.error_probs)])


@dataclass(frozen=True)
class RateBreakdown:
    """Per-sensor rate pieces at one reflection vector."""

    sinr: np.ndarray
    capacity: np.ndarray
    dispersion: np.ndarray
    penalty: np.ndarray        # a_i, bits/Hz
    rate: np.ndarray           # clamped at 0
    rate_unclamped: np.ndarray

    def to_dict(self) -> dict:
        return {name: getattr(self, name).tolist()
                for name in ("sinr", "capacity", "dispersion", "penalty",
                             "rate", "rate_unclamped")}


def rates_from_sinr(rho: np.ndarray, penalties: np.ndarray, clamp: bool = True) -> np.ndarray:
    raw = capacity(rho) - penalties * penalty_shape(rho)
    return np.maximum(raw, 0.0) if clamp else raw


def rate_breakdown(psi: np.ndarray, scenario: Scenario) -> RateBreakdown:
    psi = check_ris_vector(psi, scenario.num_elements)
    rho = sinr_all(psi, scenario.channels, scenario.noise_power)
    a = penalty_coeffs(scenario)
    raw = capacity(rho) - a * penalty_shape(rho)
    return RateBreakdown(sinr=rho, capacity=capacity(rho), dispersion=dispersion(rho),
                         penalty=a, rate=np.maximum(raw, 0.0), rate_unclamped=raw)


def per_sensor_rates(psi: np.ndarray, scenario: Scenario, clamp: bool = True) -> np.ndarray:
    rho = sinr_all(psi, scenario.channels, scenario.noise_power)
    return rates_from_sinr(rho, penalty_coeffs(scenario), clamp=clamp)


def weighted_sum_rate(psi: np.ndarray, scenario: Scenario, weights, clamp: bool = True) -> float:
    weights = check_weights(weights, scenario.num_sensors)
    return float(weights @ per_sensor_rates(psi, scenario, clamp=clamp))


def min_rate(psi: np.ndarray, scenario: Scenario, clamp: bool = True) -> float:
    return float(per_sensor_rates(psi, scenario, clamp=clamp).min())


def objective_from_sinr(rho: np.ndarray, penalties: np.ndarray, objective: str,
                        weights: np.ndarray | None, clamp: bool = False) -> float:
    rates = rates_from_sinr(rho, penalties, clamp=clamp)
    if objective == "wsr":
        return float(weights @ rates)
    if objective == "min_rate":
        return float(rates.min())
    raise ValueError(f"unknown objective {objective!r}")


def objective_value(psi: np.ndarray, scenario: Scenario, objective: str,
                    weights: np.ndarray | None = None, clamp: bool = False) -> float:
    """Scalar objective at psi: 'wsr' needs weights, 'min_rate' ignores them."""
    rho = sinr_all(psi, scenario.channels, scenario.noise_power)
    return objective_from_sinr(rho, penalty_coeffs(scenario), objective, weights, clamp=clamp)


def fairness_weights(psi0: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Weights proportional to 1/SINR at psi0, rescaled to sum to M.

    The weights are then frozen for the optimization run.
    """
    rho = sinr_all(psi0, scenario.channels, scenario.noise_power)
    if np.any(rho <= 0):
        raise DegenerateWeightsError("fairness weights undefined: some SINR is zero at psi0")
    w = 1.0 / rho
    return w * (scenario.num_sensors / w.sum())


def resolve_weights(scenario: Scenario, mode, explicit=None) -> np.ndarray | None:
    """Map a weights spec to an array: None/'equal', 'fairness', or explicit values.

    Fairness weights are evaluated at the all-ones reflection vector so every
    solver sees the same frozen objective. Explicit weights are rescaled to
    sum to the number of sensors.
    """
    M = scenario.num_sensors
    if mode is None or (isinstance(mode, str) and mode == "equal"):
        return np.ones(M)
    if isinstance(mode, str) and mode == "fairness":
        return fairness_weights(np.ones(scenario.num_elements, dtype=complex), scenario)
    if isinstance(mode, str) and mode == "explicit":
        w = check_weights(explicit, M)
        return w * (M / w.sum())
    w = check_weights(mode, M)
    return w * (M / w.sum())
