"""Sequential optimization over the lifted reflection matrix with SDR.

The rate of each sensor is bounded below by a concave surrogate that is
tight at the current iterate: a concave lower bound replaces the capacity
and a convex upper bound replaces the penalty factor. The surrogate is
maximized over the relaxed set {Phi PSD, diag(Phi) <= 1} (the rank-one
constraint is dropped), the expansion point moves to the maximizer, and the
loop repeats until the true objective stalls. A feasible reflection vector
is then recovered by Gaussian randomization.

The inner maximization is a projected supergradient ascent; the projection
onto the intersection of the PSD cone and the diagonal box runs Dykstra's
alternating scheme followed by an exact-feasibility polish.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .channels import Scenario
from .gradients import project_feasible
from .rates import objective_from_sinr, penalty_coeffs
from .starts import initial_points, random_phases
from .trace import SolverTrace
from .validation import ExpansionPointError, as_rng, check_weights

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
SIGNAL_FLOOR = 1e-30


@dataclass(frozen=True)
class SOOptions:
    outer_max_iters: int = 50
    outer_rel_tol: float = 1e-6
    inner_max_iters: int = 400
    inner_tol: float = 1e-7
    randomization_samples: int = 200
    rng_seed: int | None = None
    shannon_mode: bool = False
    num_restarts: int = 10
    factor_rank: int | None = None

    def __post_init__(self):
        if min(self.outer_max_iters, self.inner_max_iters, self.num_restarts) < 1:
            raise ValueError("iteration counts and num_restarts must be >= 1")
        if not (self.outer_rel_tol > 0 and self.inner_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.randomization_samples < 1:
            raise ValueError("randomization_samples must be >= 1")
        if self.factor_rank is not None and self.factor_rank < 1:
            raise ValueError("factor_rank must be >= 1")


def lift(psi: np.ndarray) -> np.ndarray:
    """Rank-one lifted matrix conj(psi) psi^T, Hermitian PSD by construction."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi.conj(), psi)


def hermitize(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


def _psd_clip(X: np.ndarray) -> np.ndarray:
    X = hermitize(X)
    w, V = np.linalg.eigh(X)
    if w[0] >= 0.0:
        return X
    w = np.maximum(w, 0.0)
    return hermitize((V * w) @ V.conj().T)


def _diag_clip(X: np.ndarray) -> np.ndarray:
    X = X.copy()
    d = np.minimum(np.real(np.diag(X)), 1.0)
    np.fill_diagonal(X, d)
    return X


def _is_feasible(X: np.ndarray, tol: float = 1e-12) -> bool:
    if np.real(np.diag(X)).max(initial=0.0) > 1.0 + tol:
        return False
    shift = tol * max(np.trace(X).real / max(X.shape[0], 1), 1e-300)
    try:
        np.linalg.cholesky(X + shift * np.eye(X.shape[0]))
        return True
    except np.linalg.LinAlgError:
        return False


def project_lifted_feasible(X: np.ndarray, max_passes: int = 12,
                            tol: float = 1e-9) -> np.ndarray:
    """Near-projection onto {PSD} intersect {diag <= 1}, exactly feasible.

    Dykstra's alternating projections run until the diagonal clamp stops
    moving the PSD-projected point, then the result is clipped onto the PSD
    cone and globally rescaled if a diagonal entry still exceeds one
    (scaling preserves positive semidefiniteness).
    """
    Y = hermitize(X)
    if _is_feasible(Y):
        return Y
    p = np.zeros_like(Y)
    q = np.zeros_like(Y)
    for _ in range(max_passes):
        Z = _psd_clip(Y + p)
        p = Y + p - Z
        Y = _diag_clip(Z + q)
        q = Z + q - Y
        # Y is feasible once clamping no longer perturbs the PSD projection.
        gap = np.linalg.norm(Y - Z) / max(np.linalg.norm(Z), 1e-300)
        if gap < tol:
            break
    Y = _psd_clip(Y)
    peak = np.real(np.diag(Y)).max(initial=0.0)
    if peak > 1.0:
        Y = Y / peak
    return Y


# -- lifted-domain rate pieces -------------------------------------------------

class LiftedProblem:
    """Fast trace forms tr(Phi H_i) and their cumulative sums for one scenario."""

    def __init__(self, scenario: Scenario):
        self.A = scenario.channels.cascade.T.copy()      # (L, M), column i = h_i
        self.powers = scenario.channels.powers
        self.noise = float(scenario.noise_power)
        self.penalties = penalty_coeffs(scenario)
        self.M = scenario.num_sensors

    def signal_traces(self, Phi: np.ndarray) -> np.ndarray:
        """s_i = tr(Phi H_i) = P_i h_i^H Phi h_i for all sensors.

        Floored at zero: roundoff in a PSD Phi can produce tiny negatives.
        """
        W = Phi @ self.A
        s = self.powers * np.real(np.einsum("lm,lm->m", self.A.conj(), W))
        return np.maximum(s, 0.0)

    def loads(self, s: np.ndarray):
        """(t, u): sigma^2 + sum_{j>=i} s_j and sigma^2 + sum_{j>i} s_j."""
        tail = np.concatenate([np.cumsum(s[::-1])[::-1][1:], [0.0]])
        return self.noise + tail + s, self.noise + tail

    def sinr(self, Phi: np.ndarray) -> np.ndarray:
        s = self.signal_traces(Phi)
        _, u = self.loads(s)
        return s / u

    def objective(self, Phi: np.ndarray, objective: str, weights) -> float:
        """True (unclamped) rate objective evaluated from the lifted matrix."""
        return objective_from_sinr(self.sinr(Phi), self.penalties, objective,
                                   weights, clamp=False)

    def combine(self, coeffs: np.ndarray) -> np.ndarray:
        """Hermitian matrix sum_j coeffs_j H_j from per-sensor coefficients."""
        B = self.A * (coeffs * self.powers)[None, :]
        return B @ self.A.conj().T

    def factor_inner(self, B: np.ndarray) -> np.ndarray:
        """V = A^H B, so row i is h_i^H B and s_i = P_i ||V[i]||^2."""
        return self.A.conj().T @ B

    def signal_traces_factor(self, V: np.ndarray) -> np.ndarray:
        return self.powers * np.einsum("mk,mk->m", V.conj(), V).real

    def factor_gradient(self, coeffs: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Gradient of sum_j coeffs_j tr(B B^H H_j) in the factor B."""
        return 2.0 * (self.A @ ((coeffs * self.powers)[:, None] * V))


class SurrogateContext:
    """Per-sensor surrogate bound coefficients frozen at one expansion point.

    Sensors whose expansion SINR has collapsed (below FROZEN_SINR) cannot be
    expanded: the bound degenerates as the signal power reaches zero. Those
    sensors contribute their current rate as a constant with zero gradient,
    and the outer loop guards monotonicity by rejecting worsening steps.
    """

    FROZEN_SINR = 1e-9

    def __init__(self, problem: LiftedProblem, Phi_prev: np.ndarray):
        self.problem = problem
        s_prev = problem.signal_traces(Phi_prev)
        t_prev, u_prev = problem.loads(s_prev)
        rho_prev = np.where(s_prev > 0, s_prev / u_prev, 0.0)
        self.live = (rho_prev > self.FROZEN_SINR) & (s_prev > SIGNAL_FLOOR)
        if not np.any(self.live):
            raise ExpansionPointError("expansion point has zero signal power")
        self.s_prev = np.where(self.live, s_prev, 1.0)   # placeholder off live set
        self.t_prev = t_prev
        self.rho_prev = np.where(self.live, rho_prev, 0.0)
        self.cap_prev = np.log1p(rho_prev) / LN2
        self.delta_prev = np.where(self.live, np.sqrt(2.0 * s_prev / t_prev), 1.0)
        self.frozen_rate = self.cap_prev - problem.penalties * np.sqrt(
            2.0 * rho_prev / (1.0 + rho_prev))

    def capacity_bounds(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        gain = 2.0 * np.sqrt(np.maximum(s, SIGNAL_FLOOR) / self.s_prev)
        out = self.cap_prev + self.rho_prev / LN2 * (gain - t / self.t_prev - 1.0)
        return np.where(self.live, out, self.cap_prev)

    def penalty_bounds(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        d = self.delta_prev
        out = d / 2.0 + self.s_prev / (2.0 * d * t) + s ** 2 / (2.0 * d * self.s_prev * t)
        shape_prev = np.sqrt(2.0 * self.rho_prev / (1.0 + self.rho_prev))
        return np.where(self.live, out, shape_prev)

    def rate_bounds(self, Phi: np.ndarray) -> np.ndarray:
        s = self.problem.signal_traces(Phi)
        t, _ = self.problem.loads(s)
        out = self.capacity_bounds(s, t)
        a = self.problem.penalties
        active = a > 0
        if np.any(active):
            out = out.copy()
            out[active] -= a[active] * self.penalty_bounds(s, t)[active]
        return out

    def value(self, Phi: np.ndarray, objective: str, weights) -> float:
        s = self.problem.signal_traces(Phi)
        t, _ = self.problem.loads(s)
        return self.value_from_loads(s, t, objective, weights)

    def bounds_from_loads(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        bounds = self.capacity_bounds(s, t)
        a = self.problem.penalties
        active = a > 0
        if np.any(active):
            bounds = bounds.copy()
            bounds[active] -= a[active] * self.penalty_bounds(s, t)[active]
        return bounds

    def value_from_loads(self, s: np.ndarray, t: np.ndarray, objective: str,
                         weights, softmin_mu: float = 0.0) -> float:
        bounds = self.bounds_from_loads(s, t)
        if objective == "wsr":
            return float(weights @ bounds)
        if softmin_mu > 0.0:
            # Smooth concave stand-in for the min; always below it.
            low = bounds.min()
            return float(low - softmin_mu * math.log(
                np.exp((low - bounds) / softmin_mu).sum()))
        return float(bounds.min())

    def trace_coefficients(self, s: np.ndarray, t: np.ndarray, objective: str,
                           weights, softmin_mu: float = 0.0) -> np.ndarray:
        """Per-sensor coefficients gamma with d(surrogate)/dPhi = sum gamma_j H_j.

        For min_rate this is the supergradient through the active (lowest)
        surrogate (ties to the lowest sensor index), or the softmax-weighted
        combination when a smoothing temperature is given.
        """
        problem = self.problem
        a = problem.penalties
        s_safe = np.maximum(s, SIGNAL_FLOOR)
        # d surrogate_i / ds_i and / dt_i; t_i sums s_j over j >= i.
        alpha = self.rho_prev / LN2 / np.sqrt(s_safe * self.s_prev)
        alpha = np.where(s > SIGNAL_FLOOR, alpha, 0.0)
        beta = -self.rho_prev / (LN2 * self.t_prev)
        active = (a > 0) & self.live
        if np.any(active):
            d = self.delta_prev
            alpha = alpha - np.where(active, a * s / (d * self.s_prev * t), 0.0)
            beta = beta + np.where(
                active, a * (self.s_prev + s ** 2 / self.s_prev) / (2.0 * d * t ** 2), 0.0)
        alpha = np.where(self.live, alpha, 0.0)
        beta = np.where(self.live, beta, 0.0)
        if objective == "wsr":
            w_alpha = weights * alpha
            w_beta = weights * beta
        elif softmin_mu > 0.0:
            bounds = self.bounds_from_loads(s, t)
            softmax = np.exp((bounds.min() - bounds) / softmin_mu)
            softmax /= softmax.sum()
            w_alpha = softmax * alpha
            w_beta = softmax * beta
        else:
            idx = int(np.argmin(self.bounds_from_loads(s, t)))
            w_alpha = np.zeros(problem.M)
            w_beta = np.zeros(problem.M)
            w_alpha[idx] = alpha[idx]
            w_beta[idx] = beta[idx]
        return w_alpha + np.cumsum(w_beta)

    def gradient(self, Phi: np.ndarray, objective: str, weights) -> np.ndarray:
        """Supergradient of the surrogate objective in the Hermitian space."""
        s = self.problem.signal_traces(Phi)
        t, _ = self.problem.loads(s)
        return self.problem.combine(self.trace_coefficients(s, t, objective, weights))


# -- public per-sensor bound operations (test-facing) ---------------------------

def _sensor_quantities(Phi, channels, noise_power, sensor):
    h = channels.cascade[sensor]
    s = float(channels.powers[sensor] * np.real(h.conj() @ (Phi @ h)))
    later = channels.cascade[sensor + 1:]
    if later.size:
        W = Phi @ later.T
        tail = float(np.sum(channels.powers[sensor + 1:]
                            * np.real(np.einsum("lm,lm->m", later.T.conj(), W))))
    else:
        tail = 0.0
    u = noise_power + tail
    return s, u + s, u


def capacity_lower_bound(Phi, Phi_prev, sensor, channels, noise_power) -> float:
    """Concave lower bound on the capacity of one sensor, tight at Phi_prev."""
    s_prev, t_prev, u_prev = _sensor_quantities(Phi_prev, channels, noise_power, sensor)
    if s_prev <= SIGNAL_FLOOR:
        raise ExpansionPointError("expansion point has zero signal power")
    s, t, _ = _sensor_quantities(Phi, channels, noise_power, sensor)
    rho_prev = s_prev / u_prev
    gain = 2.0 * math.sqrt(max(s, SIGNAL_FLOOR) / s_prev)
    return math.log1p(rho_prev) / LN2 + rho_prev / LN2 * (gain - t / t_prev - 1.0)


def dispersion_upper_bound(Phi, Phi_prev, sensor, channels, noise_power) -> float:
    """Convex upper bound on sqrt(2 rho/(1+rho)) of one sensor, tight at Phi_prev."""
    s_prev, t_prev, _ = _sensor_quantities(Phi_prev, channels, noise_power, sensor)
    if s_prev <= SIGNAL_FLOOR:
        raise ExpansionPointError("expansion point has zero signal power")
    delta_prev = math.sqrt(2.0 * s_prev / t_prev)
    if delta_prev <= 0:
        raise ExpansionPointError("expansion point has zero dispersion")
    s, t, _ = _sensor_quantities(Phi, channels, noise_power, sensor)
    return delta_prev / 2.0 + s_prev / (2.0 * delta_prev * t) \
        + s ** 2 / (2.0 * delta_prev * s_prev * t)


def surrogate_rate(Phi, Phi_prev, sensor, channels, noise_power, penalty) -> float:
    """Concave lower bound on the rate: capacity bound minus penalty bound."""
    out = capacity_lower_bound(Phi, Phi_prev, sensor, channels, noise_power)
    if penalty > 0:
        out -= penalty * dispersion_upper_bound(Phi, Phi_prev, sensor, channels,
                                                noise_power)
    return out


# -- inner concave maximization --------------------------------------------------

def default_factor_rank(L: int, M: int) -> int:
    """Factor width for the low-rank split Phi = B B^H.

    The relaxed problem always admits an optimum of low rank relative to the
    number of trace constraints, so a width a little above M is enough; full
    width is kept on tiny instances.
    """
    return min(L, max(M + 4, 8))


def _factor_of(Phi: np.ndarray, rank: int) -> np.ndarray:
    w, V = np.linalg.eigh(hermitize(Phi))
    w = np.maximum(w[-rank:], 0.0)
    return V[:, -rank:] * np.sqrt(w)


def _clip_rows(B: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("lk,lk->l", B.conj(), B).real)
    return B / np.maximum(norms, 1.0)[:, None]


def inner_solve(Phi_prev: np.ndarray, scenario: Scenario, objective: str = "wsr",
                weights=None, options: SOOptions | None = None,
                problem: LiftedProblem | None = None,
                factor: np.ndarray | None = None):
    """Maximize the surrogate objective over {Phi PSD, diag <= 1}.

    The lifted variable is split as Phi = B B^H, which makes the PSD cone
    implicit and turns the diagonal box into per-row norm balls of B with an
    exact closed-form projection. A spectral (Barzilai-Borwein) projected
    gradient with a nonmonotone line search climbs the surrogate; the best
    feasible iterate (never worse than Phi_prev) is returned, so the outer
    loop inherits monotonicity. Returns (Phi, info); info["factor"] carries
    the factor of the returned point for warm-starting the next call.
    """
    options = options or SOOptions()
    problem = problem or LiftedProblem(scenario)
    if objective == "wsr" and weights is None:
        weights = np.ones(problem.M)
    ctx = SurrogateContext(problem, Phi_prev)
    rank = options.factor_rank or default_factor_rank(problem.A.shape[0], problem.M)
    if factor is not None and factor.shape == (problem.A.shape[0], rank):
        B = factor.copy()
    else:
        B = _factor_of(Phi_prev, rank)
    B = _clip_rows(B)

    def score(Bmat):
        """True objective value for best-iterate bookkeeping (no smoothing)."""
        V = problem.factor_inner(Bmat)
        s = problem.signal_traces_factor(V)
        t, _ = problem.loads(s)
        return ctx.value_from_loads(s, t, objective, weights)

    best_f = score(B)
    best_B = B
    tol = options.inner_tol * (1.0 + abs(best_f))
    total_iters = 0

    if objective == "min_rate":
        # Anneal a smooth stand-in for the min across the kinks, then polish
        # with the plain supergradient. The temperature tracks both the
        # spread of the per-sensor bounds and their magnitude, so balanced
        # points (zero spread) still get a workable smoothing.
        V0 = problem.factor_inner(B)
        s0 = problem.signal_traces_factor(V0)
        t0, _ = problem.loads(s0)
        bounds0 = ctx.bounds_from_loads(s0, t0)
        spread = float(bounds0.max() - bounds0.min())
        mu0 = max(0.2 * spread, 0.05 * (1.0 + abs(float(bounds0.min()))))
        phases = [mu0, mu0 / 10.0, mu0 / 100.0, 0.0]
    else:
        phases = [0.0]
    budget = max(options.inner_max_iters // len(phases), 10)

    for mu in phases:

        def evaluate(Bmat):
            V = problem.factor_inner(Bmat)
            s = problem.signal_traces_factor(V)
            t, _ = problem.loads(s)
            return V, s, t, ctx.value_from_loads(s, t, objective, weights, softmin_mu=mu)

        V, s, t, f = evaluate(B)
        grad = problem.factor_gradient(
            ctx.trace_coefficients(s, t, objective, weights, softmin_mu=mu), V)
        gnorm = np.linalg.norm(grad)
        eta = 1.0 / max(gnorm, 1e-300)
        history = [f]
        small_gains = 0
        for _ in range(budget):
            if gnorm < 1e-300:
                break
            total_iters += 1
            step = _clip_rows(B + eta * grad) - B
            slope = float(np.real(np.vdot(grad, step)))
            if np.linalg.norm(step) <= 1e-14 * max(np.linalg.norm(B), 1.0) or slope <= 0.0:
                break
            # Nonmonotone (memory 8) backtracking along the feasible segment.
            floor = min(history[-8:])
            lam, accepted = 1.0, False
            for _ in range(15):
                V_c, s_c, t_c, fc = evaluate(B + lam * step)
                if fc >= floor + 1e-4 * lam * slope:
                    accepted = True
                    break
                lam *= 0.3
            if not accepted:
                break
            B_new = B + lam * step
            grad_new = problem.factor_gradient(
                ctx.trace_coefficients(s_c, t_c, objective, weights, softmin_mu=mu), V_c)
            d_b = B_new - B
            d_g = grad_new - grad
            curvature = -float(np.real(np.vdot(d_b, d_g)))
            if curvature > 1e-300:
                eta = float(np.real(np.vdot(d_b, d_b))) / curvature
            else:
                eta *= 2.0
            eta = min(max(eta, 1e-10 / max(gnorm, 1e-30)), 1e14)
            B, f, grad = B_new, fc, grad_new
            gnorm = np.linalg.norm(grad)
            history.append(f)
            if len(history) > 8:
                history.pop(0)
            truth = score(B) if mu > 0.0 else f
            if truth > best_f + tol:
                best_f, best_B = truth, B
                small_gains = 0
            else:
                if truth > best_f:
                    best_f, best_B = truth, B
                small_gains += 1
                if small_gains >= 10:
                    break

    converged = total_iters < options.inner_max_iters
    if not converged:
        logger.debug("inner solve hit max iterations (%d)", options.inner_max_iters)
    return best_B @ best_B.conj().T, {"iterations": total_iters, "converged": converged,
                                      "surrogate_value": best_f, "factor": best_B}


# -- rank-one recovery -------------------------------------------------------------

def gaussian_randomization(Phi: np.ndarray, scenario: Scenario, objective: str = "wsr",
                           weights=None, samples: int = 200, rng=None,
                           penalties: np.ndarray | None = None) -> np.ndarray:
    """Recover a feasible reflection vector from a relaxed lifted solution.

    Draws `samples` vectors from CN(0, Phi), clips them elementwise into the
    feasible set, adds the dominant-eigenvector candidate scaled to
    feasibility, and returns the candidate with the best objective.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = as_rng(rng)
    if weights is None and objective == "wsr":
        weights = np.ones(scenario.num_sensors)
    if penalties is None:
        penalties = penalty_coeffs(scenario)
    L = Phi.shape[0]
    w, V = np.linalg.eigh(hermitize(Phi))
    w = np.maximum(w, 0.0)

    top = np.sqrt(w[-1]) * V[:, -1].conj()
    peak = np.abs(top).max()
    if peak > 1.0:
        top = top / peak
    draws = (rng.standard_normal((L, samples))
             + 1j * rng.standard_normal((L, samples))) / math.sqrt(2.0)
    sampled = ((V * np.sqrt(w)) @ draws).conj().T
    sampled = sampled / np.maximum(np.abs(sampled), 1.0)
    candidates = np.vstack([top[None, :], sampled])

    inner = candidates @ scenario.channels.cascade.T          # (S+1, M)
    sig = scenario.channels.powers[None, :] * np.abs(inner) ** 2
    tail = np.concatenate([np.cumsum(sig[:, ::-1], axis=1)[:, ::-1][:, 1:],
                           np.zeros((sig.shape[0], 1))], axis=1)
    rho = sig / (scenario.noise_power + tail)
    from .rates import rates_from_sinr
    rates = rates_from_sinr(rho, penalties[None, :], clamp=False)
    scores = rates @ weights if objective == "wsr" else rates.min(axis=1)
    return candidates[int(np.argmax(scores))]


# -- outer sequential loop ------------------------------------------------------------

def _outer_loop(problem, scenario, objective, weights, options, Phi, trace, start):
    obj = problem.objective(Phi, objective, weights)
    if not trace.iterations:
        trace.record(0, obj, math.inf, 0.0, time.perf_counter() - start)
    settled = 0
    factor = None
    for _ in range(options.outer_max_iters):
        Phi_new, info = inner_solve(Phi, scenario, objective, weights, options,
                                    problem=problem, factor=factor)
        factor = info["factor"]
        obj_new = problem.objective(Phi_new, objective, weights)
        if obj_new < obj:
            # Frozen-sensor bookkeeping can break domination by a whisker;
            # never accept a worsening step.
            break
        tol = abs(obj_new - obj) / max(abs(obj), 1e-300)
        trace.record(trace.iterations[-1] + 1, obj_new, tol, float("nan"),
                     time.perf_counter() - start)
        Phi, obj = Phi_new, obj_new
        settled = settled + 1 if tol < options.outer_rel_tol else 0
        if settled >= 2:
            break
    return Phi, obj


def so_optimize(scenario: Scenario, objective: str = "wsr", weights=None,
                options: SOOptions | None = None, rng=None, extra_starts=None):
    """Sequential surrogate maximization with SDR and randomized recovery.

    Returns (Phi, psi, trace, info): the relaxed lifted solution, the
    recovered feasible reflection vector, the best run's outer trace, and a
    diagnostics dict with the relaxed objective of that run plus the best
    relaxed value seen across restarts. extra_starts, if given, appends
    warm-start reflection vectors to the restart schedule (the surrogate
    loop then provably dominates each of them). In shannon_mode the
    surrogate drops the blocklength penalty (infinite-blocklength design)
    while scoring and recovery stay consistent with that design objective.
    """
    options = options or SOOptions()
    design = scenario.with_error_probs(0.5) if options.shannon_mode else scenario
    if objective == "wsr":
        weights = check_weights(np.ones(design.num_sensors) if weights is None else weights,
                                design.num_sensors)
    elif objective != "min_rate":
        raise ValueError(f"unknown objective {objective!r}")
    rng = as_rng(options.rng_seed if rng is None else rng)
    problem = LiftedProblem(design)
    start = time.perf_counter()
    best = None
    relaxed_best = -math.inf
    starts = initial_points(design, objective, options.num_restarts, rng)
    if extra_starts is not None:
        starts.extend(project_feasible(np.asarray(p, dtype=complex)) for p in extra_starts)
    for psi0 in starts:
        trace = SolverTrace(method="so")
        Phi = lift(psi0)
        for attempt in range(4):
            try:
                Phi, relaxed = _outer_loop(problem, design, objective, weights,
                                           options, Phi, trace, start)
                break
            except ExpansionPointError:
                logger.warning("degenerate expansion point, drawing a new start")
                Phi = lift(random_phases(design.num_elements, rng))
        else:
            raise ExpansionPointError("could not find a non-degenerate start")
        psi = gaussian_randomization(Phi, design, objective, weights,
                                     options.randomization_samples, rng,
                                     penalties=problem.penalties)
        # Final polish of the relaxed point at tight tolerance.
        tight = dataclasses.replace(options, inner_tol=min(options.inner_tol, 1e-11),
                                    inner_max_iters=2 * options.inner_max_iters)
        Phi_p, _ = inner_solve(Phi, design, objective, weights, tight, problem=problem)
        relaxed_p = problem.objective(Phi_p, objective, weights)
        if relaxed_p > relaxed:
            Phi, relaxed = Phi_p, relaxed_p
        psi_obj = objective_from_sinr(_vector_sinr(psi, design), problem.penalties,
                                      objective, weights, clamp=False)
        # A lucky rank-one draw can beat the relaxed stationary point; if so,
        # restart the surrogate loop from it so the relaxed value dominates.
        for _ in range(2):
            if psi_obj <= relaxed + 1e-9 * (1.0 + abs(relaxed)):
                break
            Phi, relaxed = _outer_loop(problem, design, objective, weights,
                                       options, lift(psi), trace, start)
            psi_new = gaussian_randomization(Phi, design, objective, weights,
                                             options.randomization_samples, rng,
                                             penalties=problem.penalties)
            new_obj = objective_from_sinr(_vector_sinr(psi_new, design),
                                          problem.penalties, objective, weights,
                                          clamp=False)
            if new_obj >= psi_obj:
                psi, psi_obj = psi_new, new_obj
        relaxed_best = max(relaxed_best, relaxed)
        if best is None or psi_obj > best[3]:
            best = (Phi, psi, trace, psi_obj, relaxed)
    Phi, psi, trace, psi_obj, relaxed = best
    info = {"relaxed_objective": relaxed, "recovered_objective": psi_obj,
            "relaxed_best": relaxed_best}
    return Phi, psi, trace, info


def _vector_sinr(psi, scenario):
    from .rates import sinr_all
    return sinr_all(psi, scenario.channels, scenario.noise_power)
