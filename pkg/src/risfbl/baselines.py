"""Reference methods: coordinate phase search, Shannon design, brute force.

The alternating search (AO) sweeps the RIS elements one at a time, picking
each phase from a uniform grid while the others stay fixed; magnitudes are
held at one. The brute-force oracle enumerates full unit-modulus phase grids
on tiny instances and serves as ground truth in tests.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .channels import Scenario
from .rates import objective_from_sinr, penalty_coeffs, rates_from_sinr
from .trace import SolverTrace
from .validation import OracleSizeError, check_weights

BRUTE_FORCE_MAX_ELEMENTS = 3
BRUTE_FORCE_MAX_POINTS = 10 ** 8


def _objective_of_inner(inner, powers, noise, penalties, objective, weights):
    """Objective from stacked candidate inner products psi^T h (rows)."""
    sig = powers[None, :] * np.abs(inner) ** 2
    tail = np.concatenate([np.cumsum(sig[:, ::-1], axis=1)[:, ::-1][:, 1:],
                           np.zeros((sig.shape[0], 1))], axis=1)
    rho = sig / (noise + tail)
    rates = rates_from_sinr(rho, penalties[None, :], clamp=False)
    if objective == "wsr":
        return rates @ weights
    return rates.min(axis=1)


def ao_optimize(scenario: Scenario, objective: str = "wsr", weights=None,
                phase_grid_size: int = 64, max_sweeps: int = 50,
                rel_tol: float = 1e-6):
    """Alternating one-dimensional exhaustive phase search.

    Starts from a deterministic structured point (strongest-sensor phase
    alignment for wsr, the balanced cascade for min_rate, projected onto
    unit modulus) and cycles the elements; each update keeps the incumbent
    phase in the candidate set, so the objective never decreases. The trace
    logs one row per element update. Returns (psi, trace).
    """
    if phase_grid_size < 2:
        raise ValueError(f"phase_grid_size must be >= 2, got {phase_grid_size}")
    if objective == "wsr":
        weights = check_weights(np.ones(scenario.num_sensors) if weights is None else weights,
                                scenario.num_sensors)
    elif objective != "min_rate":
        raise ValueError(f"unknown objective {objective!r}")
    M, L = scenario.num_sensors, scenario.num_elements
    h = scenario.channels.cascade              # (M, L)
    powers = scenario.channels.powers
    noise = scenario.noise_power
    penalties = penalty_coeffs(scenario)
    grid = np.exp(1j * 2.0 * np.pi * np.arange(phase_grid_size) / phase_grid_size)

    from .starts import aligned_start, balanced_start
    psi0 = aligned_start(scenario) if objective == "wsr" else balanced_start(scenario)
    # snap the start onto the phase grid so the search stays inside it
    steps = np.round(np.angle(psi0) / (2.0 * np.pi / phase_grid_size)) % phase_grid_size
    psi = grid[steps.astype(int)].copy()
    inner = h @ psi                             # maintained incrementally
    obj = float(_objective_of_inner(inner[None, :], powers, noise, penalties,
                                    objective, weights)[0])
    start = time.perf_counter()
    trace = SolverTrace(method="ao")
    trace.record(0, obj, math.inf, 0.0, time.perf_counter() - start)
    updates = 0
    for _ in range(max_sweeps):
        sweep_start_obj = obj
        for l in range(L):
            candidates = np.concatenate([[psi[l]], grid])
            trial_inner = inner[None, :] + np.outer(candidates - psi[l], h[:, l])
            values = _objective_of_inner(trial_inner, powers, noise, penalties,
                                         objective, weights)
            k = int(np.argmax(values))
            if k > 0:
                inner = trial_inner[k]
                psi[l] = candidates[k]
                obj = float(values[k])
            updates += 1
            tol = abs(obj - trace.objectives[-1]) / max(abs(trace.objectives[-1]), 1e-300)
            trace.record(updates, obj, tol, 0.0, time.perf_counter() - start)
        inner = h @ psi                          # refresh accumulated drift
        improvement = abs(obj - sweep_start_obj) / max(abs(sweep_start_obj), 1e-300)
        if improvement < rel_tol:
            break
    return psi, trace


def shannon_design(scenario: Scenario, objective: str = "wsr", method: str = "so",
                   weights=None, ga_options=None, so_options=None, rng=None):
    """Design the reflection vector against the infinite-blocklength objective.

    Runs the chosen optimizer with the blocklength penalty forced to zero
    (error probability 0.5); the caller evaluates the returned vector under
    the true finite-blocklength rates. Returns (psi, trace).
    """
    if method == "so":
        from .sequential_sdr import SOOptions, so_optimize
        options = so_options or SOOptions()
        if not options.shannon_mode:
            import dataclasses
            options = dataclasses.replace(options, shannon_mode=True)
        _, psi, trace, _ = so_optimize(scenario, objective, weights, options, rng=rng)
        return psi, trace
    if method == "ga":
        from .gradient_ascent import GAOptions, ga_optimize
        capacity_scenario = scenario.with_error_probs(0.5)
        return ga_optimize(capacity_scenario, objective, weights,
                           ga_options or GAOptions(), rng=rng)
    raise ValueError(f"method must be 'so' or 'ga', got {method!r}")


def brute_force_oracle(scenario: Scenario, objective: str = "wsr", weights=None,
                       grid_per_element: int = 256, chunk: int = 1 << 18):
    """Global optimum over full unit-modulus phase grids on tiny instances.

    Refuses to run beyond 3 elements or 1e8 grid points. Returns
    (psi, value) with the unclamped objective value; ties resolve to the
    lowest enumeration index.
    """
    L = scenario.num_elements
    if L > BRUTE_FORCE_MAX_ELEMENTS:
        raise OracleSizeError(f"brute force limited to {BRUTE_FORCE_MAX_ELEMENTS} elements, got {L}")
    total = grid_per_element ** L
    if total > BRUTE_FORCE_MAX_POINTS:
        raise OracleSizeError(f"grid of {total} points exceeds {BRUTE_FORCE_MAX_POINTS}")
    if objective == "wsr":
        weights = check_weights(np.ones(scenario.num_sensors) if weights is None else weights,
                                scenario.num_sensors)
    elif objective != "min_rate":
        raise ValueError(f"unknown objective {objective!r}")
    h = scenario.channels.cascade
    powers = scenario.channels.powers
    noise = scenario.noise_power
    penalties = penalty_coeffs(scenario)
    phases = 2.0 * np.pi * np.arange(grid_per_element) / grid_per_element

    best_value = -np.inf
    best_index = 0
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total))
        digits = (idx[:, None] // grid_per_element ** np.arange(L)[None, :]) % grid_per_element
        cand = np.exp(1j * phases[digits])
        values = _objective_of_inner(cand @ h.T, powers, noise, penalties,
                                     objective, weights)
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value = float(values[k])
            best_index = lo + k
    digits = (best_index // grid_per_element ** np.arange(L)) % grid_per_element
    return np.exp(1j * phases[digits]), best_value
