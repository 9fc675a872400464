"""Input validation helpers and domain error types."""
from __future__ import annotations

import numbers

import numpy as np


class DegenerateWeightsError(ValueError):
    """Fairness weights requested at a point where some SINR is zero."""


class SingularGradientError(ArithmeticError):
    """Rate gradient requested where a signal power is numerically zero."""


class ExpansionPointError(ValueError):
    """Surrogate expansion point has zero signal power or zero dispersion."""


class OracleSizeError(ValueError):
    """Brute-force oracle refused to run: grid size guard violated."""


def as_rng(random_state) -> np.random.Generator:
    """Coerce None / int / SeedSequence / Generator into a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")
    return int(value)


def check_probability(value, name: str, upper: float = 1.0, inclusive: bool = False):
    value = float(value)
    ok = 0.0 < value < upper or (inclusive and value == upper)
    if not ok:
        bracket = "]" if inclusive else ")"
        raise ValueError(f"{name} must lie in (0, {upper}{bracket}, got {value}")
    return value


def check_per_sensor(values, num_sensors: int, name: str) -> np.ndarray:
    """Broadcast a scalar or validate a length-M sequence; returns float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(num_sensors, float(arr))
    if arr.shape != (num_sensors,):
        raise ValueError(f"{name} must be scalar or length {num_sensors}, got shape {arr.shape}")
    return arr


def check_weights(weights, num_sensors: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (num_sensors,):
        raise ValueError(f"weights must have length {num_sensors}, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    return w


def check_ris_vector(psi, num_elements: int | None = None, unit_modulus: bool = False,
                     tol: float = 1e-9) -> np.ndarray:
    """Validate a reflection vector: complex 1-D, per-element magnitude <= 1."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError(f"reflection vector must be 1-D, got shape {psi.shape}")
    if num_elements is not None and psi.shape[0] != num_elements:
        raise ValueError(f"reflection vector must have length {num_elements}, got {psi.shape[0]}")
    mags = np.abs(psi)
    if np.any(mags > 1.0 + tol):
        raise ValueError(f"reflection coefficients must satisfy |psi_l| <= 1, max is {mags.max():.6g}")
    if unit_modulus and np.any(np.abs(mags - 1.0) > tol):
        raise ValueError("reflection vector must be unit modulus per element")
    return psi


def check_lifted_matrix(Phi, num_elements: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Validate a lifted reflection matrix: Hermitian, PSD (loosely), diag <= 1."""
    Phi = np.asarray(Phi, dtype=complex)
    if Phi.ndim != 2 or Phi.shape[0] != Phi.shape[1]:
        raise ValueError(f"lifted matrix must be square, got shape {Phi.shape}")
    if num_elements is not None and Phi.shape[0] != num_elements:
        raise ValueError(f"lifted matrix must be {num_elements}x{num_elements}, got {Phi.shape}")
    scale = max(np.abs(Phi).max(), 1.0)
    if np.abs(Phi - Phi.conj().T).max() > 1e-9 * scale:
        raise ValueError("lifted matrix must be Hermitian")
    diag = np.real(np.diag(Phi))
    if np.any(diag > 1.0 + tol):
        raise ValueError(f"lifted matrix diagonal must be <= 1, max is {diag.max():.6g}")
    eigvals = np.linalg.eigvalsh(Phi)
    if eigvals.min() < -1e-8 * max(eigvals.max(), 1e-30):
        raise ValueError(f"lifted matrix must be PSD, min eigenvalue {eigvals.min():.3g}")
    return Phi
