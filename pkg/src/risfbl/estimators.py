"""Scikit-learn style estimators wrapping the reflection-vector solvers.

Each estimator is configured in __init__, fitted on a Scenario, and exposes
the designed reflection vector as `psi_` plus the achieved objective as
`objective_value_`. `predict` evaluates per-sensor rates of the fitted
design on a (possibly different) scenario, which is how imperfect-CSI
experiments score a design on the true channels. `get_params`/`set_params`
come from sklearn's BaseEstimator so the classes compose with parameter
grids and `clone`.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .channels import Scenario
from .rates import objective_value, per_sensor_rates, resolve_weights
from .validation import as_rng


class BaseRISOptimizer(BaseEstimator):
    """Shared fit/predict/score plumbing for reflection-vector optimizers."""

    def __init__(self, objective="wsr", weights=None, random_state=None):
        self.objective = objective
        self.weights = weights
        self.random_state = random_state

    def _resolve(self, scenario: Scenario):
        if self.objective not in ("wsr", "min_rate"):
            raise ValueError(f"objective must be 'wsr' or 'min_rate', got {self.objective!r}")
        if self.objective == "wsr":
            return resolve_weights(scenario, self.weights)
        return None

    def fit(self, scenario: Scenario, y=None):
        if not isinstance(scenario, Scenario):
            raise ValueError("fit expects a Scenario")
        weights = self._resolve(scenario)
        rng = as_rng(self.random_state)
        self._fit(scenario, weights, rng)
        self.scenario_ = scenario
        self.weights_ = weights
        self.n_iter_ = self.trace_.iterations[-1] if len(self.trace_) else 0
        self.objective_value_ = objective_value(self.psi_, scenario, self.objective,
                                                weights, clamp=True)
        return self

    def predict(self, scenario: Scenario | None = None) -> np.ndarray:
        """Per-sensor rates (clamped, bits/Hz) of the fitted design."""
        self._check_fitted()
        scenario = self.scenario_ if scenario is None else scenario
        return per_sensor_rates(self.psi_, scenario)

    def score(self, scenario: Scenario | None = None, y=None) -> float:
        """Reported (clamped) objective of the fitted design on a scenario."""
        self._check_fitted()
        scenario = self.scenario_ if scenario is None else scenario
        return objective_value(self.psi_, scenario, self.objective, self.weights_,
                               clamp=True)

    def _check_fitted(self):
        if not hasattr(self, "psi_"):
            raise RuntimeError("estimator is not fitted")


class GradientAscent(BaseRISOptimizer):
    """Projected gradient ascent (Euclidean or Riemannian) over the RIS vector."""

    def __init__(self, objective="wsr", weights=None, variant="euclidean",
                 projection_mode="clip_per_element", max_iters=2000, rel_tol=1e-6,
                 armijo_init=1.0, armijo_contraction=0.5, armijo_slope=1e-4,
                 max_backtracks=40, num_restarts=10, shannon_mode=False,
                 random_state=None):
        super().__init__(objective=objective, weights=weights, random_state=random_state)
        self.variant = variant
        self.projection_mode = projection_mode
        self.max_iters = max_iters
        self.rel_tol = rel_tol
        self.armijo_init = armijo_init
        self.armijo_contraction = armijo_contraction
        self.armijo_slope = armijo_slope
        self.max_backtracks = max_backtracks
        self.num_restarts = num_restarts
        self.shannon_mode = shannon_mode

    def _fit(self, scenario, weights, rng):
        from .gradient_ascent import GAOptions, ga_optimize
        options = GAOptions(variant=self.variant, projection_mode=self.projection_mode,
                            max_iters=self.max_iters, rel_tol=self.rel_tol,
                            armijo_init=self.armijo_init,
                            armijo_contraction=self.armijo_contraction,
                            armijo_slope=self.armijo_slope,
                            max_backtracks=self.max_backtracks,
                            num_restarts=self.num_restarts)
        design = scenario.with_error_probs(0.5) if self.shannon_mode else scenario
        self.psi_, self.trace_ = ga_optimize(design, self.objective, weights,
                                             options, rng=rng)


class SequentialSDR(BaseRISOptimizer):
    """Sequential concave-surrogate maximization over the lifted matrix."""

    def __init__(self, objective="wsr", weights=None, outer_max_iters=50,
                 outer_rel_tol=1e-6, inner_max_iters=300, inner_tol=1e-7,
                 randomization_samples=200, num_restarts=10, shannon_mode=False,
                 random_state=None):
        super().__init__(objective=objective, weights=weights, random_state=random_state)
        self.outer_max_iters = outer_max_iters
        self.outer_rel_tol = outer_rel_tol
        self.inner_max_iters = inner_max_iters
        self.inner_tol = inner_tol
        self.randomization_samples = randomization_samples
        self.num_restarts = num_restarts
        self.shannon_mode = shannon_mode

    def _fit(self, scenario, weights, rng):
        from .sequential_sdr import SOOptions, so_optimize
        options = SOOptions(outer_max_iters=self.outer_max_iters,
                            outer_rel_tol=self.outer_rel_tol,
                            inner_max_iters=self.inner_max_iters,
                            inner_tol=self.inner_tol,
                            randomization_samples=self.randomization_samples,
                            shannon_mode=self.shannon_mode,
                            num_restarts=self.num_restarts)
        self.lifted_, self.psi_, self.trace_, info = so_optimize(
            scenario, self.objective, weights, options, rng=rng)
        self.relaxed_objective_ = info["relaxed_objective"]


class AlternatingPhaseSearch(BaseRISOptimizer):
    """Cyclic one-dimensional exhaustive phase search (unit-modulus elements)."""

    def __init__(self, objective="wsr", weights=None, phase_grid_size=64,
                 max_sweeps=50, rel_tol=1e-6, random_state=None):
        super().__init__(objective=objective, weights=weights, random_state=random_state)
        self.phase_grid_size = phase_grid_size
        self.max_sweeps = max_sweeps
        self.rel_tol = rel_tol

    def _fit(self, scenario, weights, rng):
        from .baselines import ao_optimize
        self.psi_, self.trace_ = ao_optimize(scenario, self.objective, weights,
                                             phase_grid_size=self.phase_grid_size,
                                             max_sweeps=self.max_sweeps,
                                             rel_tol=self.rel_tol)
