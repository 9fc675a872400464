import csv
import json
import math

import numpy as np
import pytest

from risfbl.config import ScenarioConfig
from risfbl.harness import (ExperimentSpec, convergence_report, gradient_scaling_probe,
                            iterations_to_tolerance, run_experiment, summarize_rows,
                            timing_report)
from risfbl.trace import SolverTrace

FAST_CONFIG = ScenarioConfig(num_sensors=2, num_elements=4, rng_seed=11,
                             reference_loss_db=20.0)
FAST_OPTIONS = {
    "so": {"num_restarts": 1, "outer_max_iters": 6, "inner_max_iters": 60},
    "shannon-so": {"num_restarts": 1, "outer_max_iters": 6, "inner_max_iters": 60},
    "ega": {"num_restarts": 1, "max_iters": 60},
    "rga": {"num_restarts": 1, "max_iters": 60},
    "ao": {"phase_grid_size": 8, "max_sweeps": 2},
}


def fast_spec(**kwargs):
    base = dict(config=FAST_CONFIG, methods=("ega",), objective="wsr-equal",
                L_values=(4,), beta_values=(0.0,), num_seeds=1,
                method_options=FAST_OPTIONS)
    base.update(kwargs)
    return ExperimentSpec(**base)


# -- spec validation ---------------------------------------------------------

def test_spec_rejects_bad_values():
    with pytest.raises(ValueError):
        fast_spec(methods=())
    with pytest.raises(ValueError):
        fast_spec(methods=("pso",))
    with pytest.raises(ValueError):
        fast_spec(objective="sum")
    with pytest.raises(ValueError):
        fast_spec(L_values=(0,))
    with pytest.raises(ValueError):
        fast_spec(beta_values=(2.0,))
    with pytest.raises(ValueError):
        fast_spec(num_seeds=0)
    with pytest.raises(ValueError):
        fast_spec(method_options={"pso": {}})


def test_spec_from_file(tmp_path):
    payload = {
        "config": {"num_sensors": 2, "num_elements": 4, "rng_seed": 1},
        "methods": ["ega", "ao"],
        "objective": "min-rate",
        "L_values": [4, 9],
        "beta_values": [0.0, 0.1],
        "num_seeds": 2,
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(payload))
    spec = ExperimentSpec.from_file(path)
    assert spec.methods == ("ega", "ao")
    assert spec.objective == "min-rate"
    assert spec.L_values == (4, 9)
    assert spec.config.num_sensors == 2


# -- experiment runs ------------------------------------------------------------

def test_single_cell_produces_one_row(tmp_path):
    result = run_experiment(fast_spec(), out_dir=tmp_path)
    assert len(result["rows"]) == 1
    assert result["num_failed"] == 0
    with open(result["paths"]["results"]) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    row = rows[0]
    assert row["method"] == "ega"
    assert row["status"] == "ok"
    assert set(row) >= {"method", "L", "beta", "seed", "status", "iterations",
                        "rate_1", "rate_2", "wsr", "min_rate"}
    with open(result["paths"]["summary"]) as fh:
        summary = list(csv.DictReader(fh))
    assert len(summary) == 1
    assert summary[0]["n_ok"] == "1"


def test_rerun_is_byte_identical(tmp_path):
    spec = fast_spec(methods=("ega", "so"), L_values=(4,), num_seeds=2,
                     beta_values=(0.0, 0.2))
    a = run_experiment(spec, out_dir=tmp_path / "a", save_traces=False)
    b = run_experiment(spec, out_dir=tmp_path / "b", save_traces=False)
    assert (tmp_path / "a" / "results.csv").read_bytes() == \
        (tmp_path / "b" / "results.csv").read_bytes()
    assert (tmp_path / "a" / "summary.csv").read_bytes() == \
        (tmp_path / "b" / "summary.csv").read_bytes()


def test_failed_cell_marked_and_run_continues(tmp_path):
    options = dict(FAST_OPTIONS)
    options["so"] = {"num_restarts": -1}  # invalid: the cell must fail
    spec = fast_spec(methods=("so", "ega"), method_options=options)
    result = run_experiment(spec, out_dir=tmp_path)
    statuses = {r["method"]: r["status"] for r in result["rows"]}
    assert statuses["so"] == "failed"
    assert statuses["ega"] == "ok"
    assert result["num_failed"] == 1
    assert math.isnan(result["rows"][0]["wsr"])


def test_summary_matches_recomputation(tmp_path):
    spec = fast_spec(num_seeds=3)
    result = run_experiment(spec, out_dir=tmp_path)
    summary = summarize_rows(result["rows"])
    wsr_values = [r["wsr"] for r in result["rows"]]
    assert summary[0]["wsr_median"] == pytest.approx(float(np.median(wsr_values)))
    assert summary[0]["n_ok"] == 3


def test_scenarios_shared_across_methods(tmp_path):
    # identical seeds must give both methods the same channel draw; with the
    # same method listed twice implicitly covered by byte-identical reruns,
    # here we check the per-sensor rates of a deterministic method repeat
    spec = fast_spec(methods=("ao",), num_seeds=2)
    result = run_experiment(spec, out_dir=tmp_path)
    again = run_experiment(spec, out_dir=tmp_path / "again")
    for r1, r2 in zip(result["rows"], again["rows"]):
        assert r1 == r2


# -- reports ------------------------------------------------------------------------

def make_trace(method="demo", seed=0, objectives=(1.0, 2.0, 2.5)):
    trace = SolverTrace(method=method, seed=seed)
    for k, obj in enumerate(objectives):
        trace.record(k, obj, math.inf if k == 0 else 0.1, 0.0, 0.001 * (k + 1))
    return trace


def test_convergence_report_final_row_zero(tmp_path):
    rows = convergence_report([make_trace()], out_path=tmp_path / "conv.csv")
    assert rows[-1]["tolerance"] == 0.0
    # monotone trace gives non-increasing tolerances
    tols = [r["tolerance"] for r in rows]
    assert all(a >= b for a, b in zip(tols, tols[1:]))
    with open(tmp_path / "conv.csv") as fh:
        assert len(list(csv.DictReader(fh))) == len(rows)


def test_convergence_report_zero_final_flags_absolute():
    rows = convergence_report([make_trace(objectives=(1.0, 0.5, 0.0))])
    assert all(r["absolute"] == 1 for r in rows)
    assert rows[0]["tolerance"] == pytest.approx(1.0)


def test_convergence_report_requires_traces():
    with pytest.raises(ValueError):
        convergence_report([])


def test_iterations_to_tolerance():
    trace = make_trace(objectives=(1.0, 2.0, 2.4, 2.5))
    assert iterations_to_tolerance(trace, 0.2) == 2
    assert iterations_to_tolerance(trace, 1e-6) == 3


def test_timing_report_totals_and_empty(tmp_path):
    report = timing_report([])
    assert report["methods"] == []
    traces = [make_trace("ega", 0), make_trace("ega", 1), make_trace("so", 0)]
    report = timing_report(traces, out_path=tmp_path / "timing.csv")
    by_method = {m["method"]: m for m in report["methods"]}
    assert by_method["ega"]["runs"] == 2
    assert by_method["ega"]["seconds"] == pytest.approx(0.006)
    assert (tmp_path / "timing.csv").exists()


def test_gradient_probe_rows():
    rows, exponent = gradient_scaling_probe(L_values=(8, 16), repeats=5)
    assert [r["L"] for r in rows] == [8, 16]
    assert all(r["median_gradient_seconds"] > 0 for r in rows)
    assert np.isfinite(exponent)
