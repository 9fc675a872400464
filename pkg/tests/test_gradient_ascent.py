import numpy as np
import pytest

from risfbl.baselines import brute_force_oracle
from risfbl.gradient_ascent import GAOptions, ga_optimize
from risfbl.rates import fblr_rate, objective_value

from conftest import synthetic_scenario


def test_options_validation():
    with pytest.raises(ValueError):
        GAOptions(variant="newton")
    with pytest.raises(ValueError):
        GAOptions(projection_mode="none")
    with pytest.raises(ValueError):
        GAOptions(armijo_contraction=1.0)
    with pytest.raises(ValueError):
        GAOptions(rel_tol=0.0)
    with pytest.raises(ValueError):
        GAOptions(max_iters=0)


def test_trace_monotone_and_feasible_euclidean(rng):
    scenario = synthetic_scenario(rng, 3, 6)
    options = GAOptions(num_restarts=2, rng_seed=0)
    psi, trace = ga_optimize(scenario, "wsr", np.ones(3), options)
    diffs = np.diff(trace.objectives)
    assert np.all(diffs >= -1e-12)
    assert np.abs(psi).max() <= 1.0 + 1e-9


def test_riemannian_iterates_unit_modulus(rng):
    scenario = synthetic_scenario(rng, 3, 6)
    options = GAOptions(variant="riemannian", num_restarts=2, rng_seed=0)
    psi, trace = ga_optimize(scenario, "wsr", np.ones(3), options)
    np.testing.assert_allclose(np.abs(psi), 1.0, atol=1e-9)
    assert np.all(np.diff(trace.objectives) >= -1e-12)


def test_single_element_converges_to_unit_magnitude():
    # M = 1, L = 1, unit channel: SINR = |psi|^2 P / noise, maximized at |psi| = 1
    scenario = synthetic_scenario(np.random.default_rng(0), 1, 1, noise_power=1.0,
                                  power_range=(1.0, 1.0))
    scenario.channels.cascade[0, 0] = 1.0
    scenario.channels.lifted[0, 0, 0] = 1.0
    psi, _ = ga_optimize(scenario, "wsr", np.ones(1),
                         GAOptions(num_restarts=3, rng_seed=1))
    assert abs(psi[0]) == pytest.approx(1.0, abs=1e-6)
    achieved = objective_value(psi, scenario, "wsr", np.ones(1), clamp=False)
    assert achieved == pytest.approx(fblr_rate(1.0, 100, 1e-3), abs=1e-6)


@pytest.mark.parametrize("variant", ["euclidean", "riemannian"])
def test_small_instance_reaches_grid_optimum(variant, rng):
    for trial in range(3):
        scenario = synthetic_scenario(rng, 2, 2, noise_power=1.0)
        _, oracle_value = brute_force_oracle(scenario, "wsr", np.ones(2),
                                             grid_per_element=256)
        psi, _ = ga_optimize(scenario, "wsr", np.ones(2),
                             GAOptions(variant=variant, num_restarts=10, rng_seed=trial))
        achieved = objective_value(psi, scenario, "wsr", np.ones(2), clamp=False)
        assert achieved >= 0.99 * oracle_value


def test_min_rate_objective_runs_and_is_monotone(rng):
    scenario = synthetic_scenario(rng, 3, 6)
    psi, trace = ga_optimize(scenario, "min_rate", None,
                             GAOptions(num_restarts=2, rng_seed=0))
    assert np.all(np.diff(trace.objectives) >= -1e-12)
    assert np.abs(psi).max() <= 1.0 + 1e-9


def test_deterministic_given_seed(rng):
    scenario = synthetic_scenario(rng, 3, 5)
    options = GAOptions(num_restarts=3, rng_seed=77)
    psi_a, trace_a = ga_optimize(scenario, "wsr", np.ones(3), options)
    psi_b, trace_b = ga_optimize(scenario, "wsr", np.ones(3), options)
    np.testing.assert_array_equal(psi_a, psi_b)
    assert trace_a.objectives == trace_b.objectives


def test_unknown_objective_rejected(rng):
    scenario = synthetic_scenario(rng, 2, 3)
    with pytest.raises(ValueError):
        ga_optimize(scenario, "max_rate")


def test_scale_by_max_projection_mode(rng):
    scenario = synthetic_scenario(rng, 2, 4)
    psi, _ = ga_optimize(scenario, "wsr", np.ones(2),
                         GAOptions(projection_mode="scale_by_max", num_restarts=2,
                                   rng_seed=0))
    assert np.abs(psi).max() <= 1.0 + 1e-9
