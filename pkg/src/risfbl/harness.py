"""Experiment runner: seeded sweeps over (L, beta, seed, method) cells.

Each cell builds a scenario, optionally contaminates the designer's CSI,
fits the requested method, and scores the design on the true channels. Raw
per-cell results go to results.csv (deterministic given seeds), wall times
to a separate timings.csv so reruns stay byte-identical, medians and
quartiles to summary.csv, and per-run traces to traces/. Any figure-style
view can be re-derived from the raw rows alone.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import Scenario, make_scenario, perturb_csi
from .config import ScenarioConfig
from .estimators import AlternatingPhaseSearch, GradientAscent, SequentialSDR
from .rates import per_sensor_rates, resolve_weights
from .trace import FLOAT_FMT, SolverTrace

logger = logging.getLogger(__name__)

OBJECTIVES = ("wsr-equal", "wsr-fair", "min-rate")
METHODS = ("ega", "rga", "so", "ao", "shannon-so")


def _build_method(name: str, objective: str, weights, random_state, overrides: dict):
    kwargs = dict(objective=objective, weights=weights, random_state=random_state)
    kwargs.update(overrides)
    if name == "ega":
        return GradientAscent(variant="euclidean", **kwargs)
    if name == "rga":
        return GradientAscent(variant="riemannian", **kwargs)
    if name == "so":
        return SequentialSDR(**kwargs)
    if name == "shannon-so":
        return SequentialSDR(shannon_mode=True, **kwargs)
    if name == "ao":
        kwargs.pop("random_state", None)
        return AlternatingPhaseSearch(**kwargs)
    raise ValueError(f"unknown method {name!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: scenario template, methods, objective, grid of cells."""

    config: ScenarioConfig = field(default_factory=ScenarioConfig)
    methods: tuple = ("so",)
    objective: str = "wsr-equal"
    L_values: tuple = (16, 36, 64, 100)
    beta_values: tuple = (0.0,)
    num_seeds: int = 50
    output_dir: str | None = None
    method_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.methods:
            raise ValueError("method list must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}, choose from {METHODS}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if any(L < 1 for L in self.L_values):
            raise ValueError("L values must be positive")
        for b in self.beta_values:
            if not 0.0 <= b <= 1.0:
                raise ValueError("beta values must lie in [0, 1]")
        if self.num_seeds < 1:
            raise ValueError("num_seeds must be >= 1")
        for m in self.method_options:
            if m not in METHODS:
                raise ValueError(f"method_options for unknown method {m!r}")

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            data = json.load(fh)
        if "config_path" in data:
            config = ScenarioConfig.from_file(data.pop("config_path"))
        else:
            config = ScenarioConfig.from_dict(data.pop("config", {}))
        for key in ("methods", "L_values", "beta_values"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(config=config, **data)


def _objective_parts(objective: str):
    return {"wsr-equal": ("wsr", "equal"),
            "wsr-fair": ("wsr", "fairness"),
            "min-rate": ("min_rate", None)}[objective]


def _cell_seed(base: int, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(base) & 0xFFFFFFFF, *[int(k) for k in key]])


def _fmt(x) -> str:
    return FLOAT_FMT.format(float(x))


def run_experiment(spec: ExperimentSpec, out_dir=None, save_traces: bool = True) -> dict:
    """Run every (L, beta, seed, method) cell and write the result files.

    Returns a dict with output paths and the in-memory rows. Solver failures
    mark the cell's status and the sweep continues.
    """
    out = Path(out_dir if out_dir is not None else (spec.output_dir or "."))
    out.mkdir(parents=True, exist_ok=True)
    traces_dir = out / "traces"
    if save_traces:
        traces_dir.mkdir(exist_ok=True)
    objective, weights_mode = _objective_parts(spec.objective)
    M = spec.config.num_sensors
    base = spec.config.rng_seed

    rows, timing_rows, traces = [], [], []
    for L in spec.L_values:
        cfg = spec.config.replace(num_elements=int(L))
        for seed in range(spec.num_seeds):
            true_scenario, _ = make_scenario(cfg, np.random.default_rng(
                _cell_seed(base, 1, L, seed)))
            for b_idx, beta in enumerate(spec.beta_values):
                if beta > 0:
                    design_channels = perturb_csi(true_scenario.channels, beta,
                                                  np.random.default_rng(
                                                      _cell_seed(base, 2, L, b_idx, seed)))
                    design_scenario = true_scenario.with_channels(design_channels)
                else:
                    design_scenario = true_scenario
                weights = resolve_weights(design_scenario, weights_mode) \
                    if objective == "wsr" else None
                eval_weights = weights if weights is not None else np.ones(M)
                for m_idx, method in enumerate(spec.methods):
                    row = {"method": method, "L": int(L), "beta": float(beta),
                           "seed": seed}
                    t0 = time.perf_counter()
                    try:
                        est = _build_method(
                            method, objective, weights,
                            _cell_seed(base, 3, L, b_idx, seed, m_idx),
                            spec.method_options.get(method, {}))
                        est.fit(design_scenario)
                        wall = time.perf_counter() - t0
                        rates = per_sensor_rates(est.psi_, true_scenario)
                        row.update(status="ok", iterations=est.n_iter_)
                        for i, r in enumerate(rates):
                            row[f"rate_{i + 1}"] = float(r)
                        row["wsr"] = float(eval_weights @ rates)
                        row["min_rate"] = float(rates.min())
                        trace = est.trace_
                        trace.method = method
                        trace.seed = seed
                        traces.append(trace)
                        if save_traces:
                            trace.to_csv(traces_dir /
                                         f"{method}_L{L}_b{b_idx}_seed{seed}.csv")
                    except Exception as exc:  # cell failure: record and continue
                        wall = time.perf_counter() - t0
                        logger.exception("cell failed: %s", row)
                        row.update(status="failed", iterations=0, wsr=math.nan,
                                   min_rate=math.nan,
                                   **{f"rate_{i + 1}": math.nan for i in range(M)})
                    timing_rows.append({**{k: row[k] for k in ("method", "L", "beta", "seed")},
                                        "wall_time_s": wall,
                                        "iterations": row["iterations"]})
                    rows.append(row)

    paths = {
        "results": out / "results.csv",
        "summary": out / "summary.csv",
        "timings": out / "timings.csv",
    }
    _write_results(paths["results"], rows, M)
    _write_summary(paths["summary"], rows)
    _write_timings(paths["timings"], timing_rows)
    return {"paths": paths, "rows": rows, "timing_rows": timing_rows,
            "traces": traces, "num_failed": sum(r["status"] != "ok" for r in rows)}


def _write_results(path, rows, M):
    columns = (["method", "L", "beta", "seed", "status", "iterations"]
               + [f"rate_{i + 1}" for i in range(M)] + ["wsr", "min_rate"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row["method"], row["L"], _fmt(row["beta"]), row["seed"],
                             row["status"], row["iterations"]]
                            + [_fmt(row[f"rate_{i + 1}"]) for i in range(M)]
                            + [_fmt(row["wsr"]), _fmt(row["min_rate"])])


def _quartiles(values):
    arr = np.asarray(values, dtype=float)
    return (float(np.median(arr)), float(np.percentile(arr, 25)),
            float(np.percentile(arr, 75))) if arr.size else (math.nan,) * 3


def summarize_rows(rows):
    """Group raw rows by (method, L, beta): medians and quartiles over seeds."""
    groups = {}
    for row in rows:
        groups.setdefault((row["method"], row["L"], row["beta"]), []).append(row)
    out = []
    for (method, L, beta), cell in sorted(groups.items(),
                                          key=lambda kv: (kv[0][1], kv[0][2],
                                                          str(kv[0][0]))):
        ok = [r for r in cell if r["status"] == "ok"]
        wsr_med, wsr_q25, wsr_q75 = _quartiles([r["wsr"] for r in ok])
        mr_med, mr_q25, mr_q75 = _quartiles([r["min_rate"] for r in ok])
        out.append({"method": method, "L": L, "beta": beta, "n_ok": len(ok),
                    "n_total": len(cell), "wsr_median": wsr_med,
                    "wsr_q25": wsr_q25, "wsr_q75": wsr_q75,
                    "min_rate_median": mr_med, "min_rate_q25": mr_q25,
                    "min_rate_q75": mr_q75})
    return out


def _write_summary(path, rows):
    summary = summarize_rows(rows)
    columns = ["method", "L", "beta", "n_ok", "n_total", "wsr_median", "wsr_q25",
               "wsr_q75", "min_rate_median", "min_rate_q25", "min_rate_q75"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for s in summary:
            writer.writerow([s["method"], s["L"], _fmt(s["beta"]), s["n_ok"],
                             s["n_total"]] + [_fmt(s[c]) for c in columns[5:]])


def _write_timings(path, timing_rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "L", "beta", "seed", "wall_time_s", "iterations"])
        for row in timing_rows:
            writer.writerow([row["method"], row["L"], _fmt(row["beta"]), row["seed"],
                             _fmt(row["wall_time_s"]), row["iterations"]])


# -- reports --------------------------------------------------------------------

def convergence_report(traces, out_path=None):
    """Tolerance-versus-iteration rows: |obj_k - obj_final| / |obj_final|.

    A zero final objective switches that trace to absolute differences and
    flags the rows.
    """
    if not traces:
        raise ValueError("no traces given")
    rows = []
    for trace in traces:
        final = trace.final_objective
        absolute = abs(final) < 1e-300
        for k, obj in zip(trace.iterations, trace.objectives):
            tol = abs(obj - final) if absolute else abs(obj - final) / abs(final)
            rows.append({"method": trace.method, "seed": trace.seed, "iteration": k,
                         "objective": obj, "tolerance": tol,
                         "absolute": int(absolute)})
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "seed", "iteration", "objective",
                             "tolerance", "absolute"])
            for r in rows:
                writer.writerow([r["method"], r["seed"], r["iteration"],
                                 _fmt(r["objective"]), _fmt(r["tolerance"]),
                                 r["absolute"]])
    return rows


def iterations_to_tolerance(trace: SolverTrace, tol: float) -> int | None:
    """First iteration whose relative gap to the final objective is < tol."""
    final = trace.final_objective
    scale = abs(final)
    for k, obj in zip(trace.iterations, trace.objectives):
        gap = abs(obj - final) if scale < 1e-300 else abs(obj - final) / scale
        if gap < tol:
            return k
    return None


def gradient_scaling_probe(L_values=(25, 50, 100), num_sensors=10, repeats=30,
                           seed=0):
    """Median wall time of one weighted-sum rate gradient at each size.

    Returns (rows, exponent) where exponent is the fitted slope of
    log(time) against log(L).
    """
    from .gradients import GradientWorkspace
    from .starts import random_phases
    rows = []
    for L in L_values:
        cfg = ScenarioConfig(num_sensors=num_sensors, num_elements=int(L),
                             rng_seed=seed)
        scenario, _ = make_scenario(cfg)
        ws = GradientWorkspace.from_scenario(scenario)
        psi = random_phases(L, np.random.default_rng(seed))
        for _ in range(5):
            ws.rate_gradients(psi)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            for _ in range(4):
                ws.rate_gradients(psi)
            times.append((time.perf_counter() - t0) / 4.0)
        rows.append({"L": int(L), "median_gradient_seconds": float(np.median(times))})
    logs = np.log([r["median_gradient_seconds"] for r in rows])
    exponent = float(np.polyfit(np.log([r["L"] for r in rows]), logs, 1)[0])
    return rows, exponent


def timing_report(traces, out_path=None, probe: bool = False,
                  probe_sizes=(25, 50, 100), probe_sensors=10, probe_repeats=30):
    """Per-method wall-clock totals, optionally with the gradient scaling probe."""
    totals = {}
    for trace in traces:
        entry = totals.setdefault(trace.method, {"seconds": 0.0, "iterations": 0,
                                                 "runs": 0})
        entry["seconds"] += trace.total_wall_time
        entry["iterations"] += trace.iterations[-1] if len(trace) else 0
        entry["runs"] += 1
    report = {"methods": [{"method": m, **v} for m, v in sorted(totals.items())]}
    if probe:
        rows, exponent = gradient_scaling_probe(probe_sizes, probe_sensors,
                                                probe_repeats)
        report["gradient_probe"] = rows
        report["gradient_exponent"] = exponent
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "seconds", "iterations", "runs"])
            for entry in report["methods"]:
                writer.writerow([entry["method"], _fmt(entry["seconds"]),
                                 entry["iterations"], entry["runs"]])
            if probe:
                writer.writerow([])
                writer.writerow(["probe_L", "median_gradient_seconds"])
                for row in report["gradient_probe"]:
                    writer.writerow([row["L"], _fmt(row["median_gradient_seconds"])])
                writer.writerow(["fitted_exponent", _fmt(report["gradient_exponent"])])
    return report
