"""Projected gradient ascent over the reflection vector.

The Euclidean variant projects each trial step back into {|psi_l| <= 1};
the Riemannian variant removes the radial gradient component and retracts
onto the unit-modulus manifold by elementwise normalization. Both use an
Armijo backtracking line search, so accepted iterates never decrease the
objective. Multi-start from uniform random phases handles non-convexity.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .channels import Scenario
from .gradients import (GradientWorkspace, armijo_step, project_feasible,
                        retract_unit_modulus, riemannian_project)
from .rates import objective_from_sinr, penalty_coeffs, rates_from_sinr
from .starts import initial_points, random_phases
from .trace import SolverTrace
from .validation import SingularGradientError, as_rng, check_weights

logger = logging.getLogger(__name__)

VARIANTS = ("euclidean", "riemannian")
PROJECTION_MODES = ("clip_per_element", "scale_by_max")
MAX_SINGULAR_RETRIES = 3


@dataclass(frozen=True)
class GAOptions:
    variant: str = "euclidean"
    projection_mode: str = "clip_per_element"
    max_iters: int = 2000
    rel_tol: float = 1e-6
    armijo_init: float = 1.0
    armijo_contraction: float = 0.5
    armijo_slope: float = 1e-4
    max_backtracks: int = 40
    num_restarts: int = 10
    rng_seed: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.projection_mode not in PROJECTION_MODES:
            raise ValueError(f"projection_mode must be one of {PROJECTION_MODES}")
        if self.max_iters < 1 or self.num_restarts < 1:
            raise ValueError("max_iters and num_restarts must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not 0 < self.armijo_contraction < 1:
            raise ValueError("armijo_contraction must lie in (0, 1)")
        if not 0 < self.armijo_slope < 1:
            raise ValueError("armijo_slope must lie in (0, 1)")
        if not self.armijo_init > 0 or self.max_backtracks < 0:
            raise ValueError("armijo_init must be > 0 and max_backtracks >= 0")


def _ascent_direction(grads, weights, rates, variant, psi, objective):
    if objective == "wsr":
        g = weights @ grads
    else:
        g = grads[int(np.argmin(rates))]
    if variant == "riemannian":
        return riemannian_project(g, psi), g
    return g, g


def _run_once(scenario, objective, weights, options, workspace, psi0, trace,
              start_time, rng):
    a = workspace.penalties
    if options.variant == "riemannian":
        project = retract_unit_modulus
    else:
        project = lambda x: project_feasible(x, options.projection_mode)

    def value(psi):
        _, _, s, t, u = workspace.powers_at(psi)
        return objective_from_sinr(s / u, a, objective, weights, clamp=False)

    psi = psi0
    obj = value(psi)
    trace.record(len(trace), obj, math.inf, 0.0, time.perf_counter() - start_time)
    retries = 0
    for _ in range(options.max_iters):
        try:
            grads = workspace.rate_gradients(psi)
        except SingularGradientError:
            if retries >= MAX_SINGULAR_RETRIES:
                logger.warning("gradient singular %d times, ending run", retries)
                break
            retries += 1
            logger.warning("singular gradient, restarting from a perturbed point")
            psi = project(psi * np.exp(1j * 1e-2 * rng.standard_normal(psi.size)))
            obj = value(psi)
            continue
        rates = rates_from_sinr(workspace.sinr_all(psi), a, clamp=False)
        direction, grad = _ascent_direction(grads, weights, rates, options.variant,
                                            psi, objective)
        alpha, stalled = armijo_step(
            psi, direction, value, grad=direction,
            init=options.armijo_init, contraction=options.armijo_contraction,
            slope=options.armijo_slope, max_backtracks=options.max_backtracks,
            project=project)
        if stalled:
            break
        psi = project(psi + alpha * direction)
        new_obj = value(psi)
        tol = abs(new_obj - obj) / max(abs(obj), 1e-300)
        trace.record(len(trace), new_obj, tol, alpha, time.perf_counter() - start_time)
        obj = new_obj
        if tol < options.rel_tol:
            break
    return psi, obj


def ga_optimize(scenario: Scenario, objective: str = "wsr", weights=None,
                options: GAOptions | None = None, rng=None):
    """Maximize the chosen rate objective by projected gradient ascent.

    For 'wsr' the ascent direction is the weighted sum of per-sensor rate
    gradients; for 'min_rate' it is the gradient of the currently-worst
    sensor (ties to the lowest index). The first restart begins from a
    structured operating point, the rest from uniform random phases;
    returns (psi, trace) of the best run. The internal objective is the
    unclamped rate.
    """
    options = options or GAOptions()
    if objective == "wsr":
        weights = check_weights(np.ones(scenario.num_sensors) if weights is None else weights,
                                scenario.num_sensors)
    elif objective != "min_rate":
        raise ValueError(f"unknown objective {objective!r}")
    rng = as_rng(options.rng_seed if rng is None else rng)
    workspace = GradientWorkspace.from_scenario(scenario)
    start = time.perf_counter()
    best = None
    for psi0 in initial_points(scenario, objective, options.num_restarts, rng):
        if options.variant == "riemannian":
            psi0 = psi0 / np.abs(psi0).clip(1e-12)
        trace = SolverTrace(method=options.variant)
        psi, obj = _run_once(scenario, objective, weights, options, workspace,
                             psi0, trace, start, rng)
        if best is None or obj > best[1]:
            best = (psi, obj, trace)
    return best[0], best[2]
