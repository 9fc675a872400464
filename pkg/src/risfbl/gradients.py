"""Rate gradients in the reflection vector, feasibility projection, line search.

Gradients use the conjugate Wirtinger convention: for a real objective f the
returned vector is 2 * df/d(conj(psi)), i.e. grad_x f + j * grad_y f on the
real/imaginary parts, so psi + alpha * grad is a steepest-ascent step and
f(psi + d) - f(psi) ~ Re(grad^H d). Central finite differences on the real
coordinates are the ground truth the analytic forms are tested against.

Per-sensor gradients are evaluated through the precomputed lifted channel
matrices (matrix-vector products), so one evaluation costs O(M L^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, Scenario
from .rates import penalty_coeffs
from .validation import SingularGradientError, check_ris_vector

try:
    import numba
except ImportError:  # pragma: no cover - numba ships with the environment
    numba = None

LN2 = math.log(2.0)
SIGNAL_FLOOR = 1e-30
UNIT_MODULUS_TOL = 1e-9


def lifted_tail_sums(lifted: np.ndarray) -> np.ndarray:
    """Suffix sums over sensors: tail[i] = sum_{j >= i} lifted[j]."""
    return np.cumsum(lifted[::-1], axis=0)[::-1]


def _rate_gradient_kernel(lifted, lifted_tail, psi, noise, penalties):
    """Per-sensor rate gradients via the lifted matrix-vector products.

    Returns (grads, singular): the stacked unclamped-rate gradients and the
    count of penalized sensors whose signal power underflowed (their penalty
    term is skipped here; the caller raises).
    """
    M = lifted.shape[0]
    L = lifted.shape[1]
    z = np.conj(psi)
    r = np.empty((M, L), np.complex128)
    rbar = np.empty((M, L), np.complex128)
    s = np.empty(M)
    for i in range(M):
        acc_s = 0.0
        for a in range(L):
            acc1 = 0.0 + 0.0j
            acc2 = 0.0 + 0.0j
            for b in range(L):
                acc1 += lifted[i, a, b] * z[b]
                acc2 += lifted_tail[i, a, b] * z[b]
            r[i, a] = acc1
            rbar[i, a] = acc2
            acc_s += (acc1 * psi[a]).real
        s[i] = max(acc_s, 0.0)
    grads = np.empty((M, L), np.complex128)
    tail = 0.0
    u = np.empty(M)
    for i in range(M - 1, -1, -1):
        u[i] = noise + tail
        tail += s[i]
    scale_c = 2.0 / LN2
    singular = 0
    for i in range(M):
        t_i = u[i] + s[i]
        pen = penalties[i] > 0.0
        if pen and s[i] < SIGNAL_FLOOR:
            singular += 1
            pen = False
        coef = penalties[i] * math.sqrt(2.0 * t_i / s[i]) if pen else 0.0
        for a in range(L):
            g = scale_c * (np.conj(rbar[i, a]) / t_i
                           - np.conj(rbar[i, a] - r[i, a]) / u[i])
            if pen:
                g -= coef * (np.conj(r[i, a]) / t_i
                             - s[i] * np.conj(rbar[i, a]) / (t_i * t_i))
            grads[i, a] = g
    return grads, singular


if numba is not None:
    _rate_gradient_kernel = numba.njit(cache=True, fastmath=False)(_rate_gradient_kernel)


@dataclass
class GradientWorkspace:
    """Precomputed tensors for repeated gradient evaluations on one scenario."""

    lifted: np.ndarray       # (M, L, L) P_i h_i h_i^H
    lifted_tail: np.ndarray  # (M, L, L) sum_{j >= i}
    penalties: np.ndarray    # (M,) a_i
    noise_power: float

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "GradientWorkspace":
        lifted = scenario.channels.lifted
        return cls(lifted=lifted, lifted_tail=lifted_tail_sums(lifted),
                   penalties=penalty_coeffs(scenario),
                   noise_power=float(scenario.noise_power))

    def powers_at(self, psi: np.ndarray):
        """Per-sensor signal powers and interference loads: (r, rbar, s, t, u).

        s is floored at zero (quadratic forms of PSD matrices can round
        negative near zero) and the loads are built by suffix summation of
        the s values, which stays positive where t - s would cancel.
        """
        z = psi.conj()
        r = self.lifted @ z            # (M, L)
        rbar = self.lifted_tail @ z    # (M, L)
        s = np.maximum(np.real(r @ psi), 0.0)
        tail = np.concatenate([np.cumsum(s[::-1])[::-1][1:], [0.0]])
        u = self.noise_power + tail
        return r, rbar, s, u + s, u

    def rate_gradients(self, psi: np.ndarray) -> np.ndarray:
        """Per-sensor gradients of the unclamped rate, stacked (M, L).

        Raises SingularGradientError when a penalized sensor has numerically
        zero signal power (the penalty gradient divides by it).
        """
        if psi.dtype != np.complex128 or not psi.flags.c_contiguous:
            psi = np.ascontiguousarray(psi, dtype=np.complex128)
        grads, singular = _rate_gradient_kernel(self.lifted, self.lifted_tail, psi,
                                                self.noise_power, self.penalties)
        if singular:
            raise SingularGradientError("signal power below 1e-30 for a penalized sensor")
        return grads

    def sinr_all(self, psi: np.ndarray) -> np.ndarray:
        _, _, s, t, u = self.powers_at(psi)
        return s / u


def _single_sensor_tensors(channels: ChannelSet, sensor: int):
    M = channels.num_sensors
    if not 0 <= sensor < M:
        raise ValueError(f"sensor index must lie in [0, {M}), got {sensor}")
    H = channels.lifted[sensor]
    Hbar = channels.lifted[sensor:].sum(axis=0)
    return H, Hbar


def capacity_gradient(psi: np.ndarray, channels: ChannelSet, noise_power: float,
                      sensor: int) -> np.ndarray:
    """Gradient of the capacity of one sensor under SIC."""
    psi = np.asarray(psi, dtype=complex)
    H, Hbar = _single_sensor_tensors(channels, sensor)
    z = psi.conj()
    r = H @ z
    rbar = Hbar @ z
    s = float(np.real(r @ psi))
    t = noise_power + float(np.real(rbar @ psi))
    u = t - s
    return (2.0 / LN2) * (rbar.conj() / t - (rbar - r).conj() / u)


def penalty_shape_gradient(psi: np.ndarray, channels: ChannelSet, noise_power: float,
                           sensor: int) -> np.ndarray:
    """Gradient of sqrt(2 rho_i / (1 + rho_i)) at psi."""
    psi = np.asarray(psi, dtype=complex)
    H, Hbar = _single_sensor_tensors(channels, sensor)
    z = psi.conj()
    r = H @ z
    rbar = Hbar @ z
    s = float(np.real(r @ psi))
    t = noise_power + float(np.real(rbar @ psi))
    if s < SIGNAL_FLOOR:
        raise SingularGradientError("signal power below 1e-30")
    return math.sqrt(2.0 * t / s) * (r.conj() / t - s * rbar.conj() / t ** 2)


def rate_gradient(psi: np.ndarray, scenario: Scenario, sensor: int) -> np.ndarray:
    """Euclidean gradient of the unclamped finite-blocklength rate of one sensor."""
    a = penalty_coeffs(scenario)[sensor]
    grad = capacity_gradient(psi, scenario.channels, scenario.noise_power, sensor)
    if a > 0:
        grad = grad - a * penalty_shape_gradient(psi, scenario.channels,
                                                 scenario.noise_power, sensor)
    return grad


def riemannian_project(grad: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Project a gradient onto the tangent space of the unit-modulus manifold."""
    psi = check_ris_vector(psi, unit_modulus=True, tol=UNIT_MODULUS_TOL)
    return grad - np.real(grad * psi.conj()) * psi


def riemannian_rate_gradient(psi: np.ndarray, scenario: Scenario, sensor: int) -> np.ndarray:
    return riemannian_project(rate_gradient(psi, scenario, sensor), psi)


def project_feasible(psi: np.ndarray, mode: str = "clip_per_element") -> np.ndarray:
    """Map an arbitrary vector into {|psi_l| <= 1}.

    clip_per_element rescales only the offending entries to unit magnitude
    (the exact Euclidean projection); scale_by_max divides the whole vector
    by its largest magnitude when that exceeds one.
    """
    psi = np.asarray(psi, dtype=complex)
    mags = np.abs(psi)
    if mode == "clip_per_element":
        return psi / np.maximum(mags, 1.0)
    if mode == "scale_by_max":
        peak = mags.max() if psi.size else 0.0
        return psi / peak if peak > 1.0 else psi.copy()
    raise ValueError(f"unknown projection mode {mode!r}")


def retract_unit_modulus(psi: np.ndarray) -> np.ndarray:
    """Normalize every entry back onto the unit circle."""
    psi = np.asarray(psi, dtype=complex)
    mags = np.abs(psi)
    safe = np.where(mags > 0, mags, 1.0)
    return np.where(mags > 0, psi / safe, 1.0 + 0.0j)


def armijo_step(psi: np.ndarray, direction: np.ndarray, objective, *, grad=None,
                init: float = 1.0, contraction: float = 0.5, slope: float = 1e-4,
                max_backtracks: int = 40, project=None):
    """Backtracking line search for projected ascent.

    Returns (alpha, stalled): the largest alpha = init * contraction^k with
    objective(project(psi + alpha * direction)) >= f0 + slope * alpha * <grad, d>,
    or (0.0, True) when no such step exists within max_backtracks.
    """
    if project is None:
        project = lambda x: x
    if grad is None:
        grad = direction
    inner = float(np.real(np.vdot(grad, direction)))
    if inner <= 0.0:
        return 0.0, True
    f0 = objective(psi)
    alpha = init
    for _ in range(max_backtracks + 1):
        if objective(project(psi + alpha * direction)) >= f0 + slope * alpha * inner:
            return alpha, False
        alpha *= contraction
    return 0.0, True
