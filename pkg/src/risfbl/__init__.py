"""RIS reflection design for short-packet NOMA uplinks.

Builds Rician-faded cascaded channels, scores reflection vectors with the
finite-blocklength rate model under successive interference cancellation,
and maximizes weighted-sum or minimum rates with projected gradient ascent
(Euclidean or Riemannian), sequential concave-surrogate maximization with
semidefinite relaxation, and an alternating phase-search baseline.
"""

from .channels import (ChannelSet, Geometry, Scenario, build_scenario, load_scenario,
                       make_scenario, most_square_factors, path_loss, perturb_csi,
                       rician_channel, save_scenario, upa_steering)
from .config import ScenarioConfig, thermal_noise_power
from .estimators import (AlternatingPhaseSearch, BaseRISOptimizer, GradientAscent,
                         SequentialSDR)
from .baselines import ao_optimize, brute_force_oracle, shannon_design
from .gradient_ascent import GAOptions, ga_optimize
from .gradients import (GradientWorkspace, armijo_step, capacity_gradient,
                        penalty_shape_gradient, project_feasible, rate_gradient,
                        riemannian_project, riemannian_rate_gradient)
from .harness import (ExperimentSpec, convergence_report, gradient_scaling_probe,
                      run_experiment, summarize_rows, timing_report)
from .rates import (RateBreakdown, capacity, dispersion, fairness_weights, fblr_rate,
                    gaussian_q, min_rate, objective_value, penalty_coeff, per_sensor_rates,
                    q_inv, rate_breakdown, sinr, sinr_all, weighted_sum_rate)
from .sequential_sdr import (SOOptions, capacity_lower_bound, dispersion_upper_bound,
                             gaussian_randomization, inner_solve, lift, so_optimize,
                             surrogate_rate)
from .starts import aligned_start, balanced_start, random_phases
from .trace import SolverTrace
from .validation import (DegenerateWeightsError, ExpansionPointError, OracleSizeError,
                         SingularGradientError)

__version__ = "0.1.0"
