"""Command-line interface: scenario generation, single runs, sweeps, reports."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np


def _cmd_generate_scenario(args) -> int:
    from .channels import make_scenario, save_scenario
    from .config import ScenarioConfig
    config = ScenarioConfig.from_file(args.config)
    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    scenario, geometry = make_scenario(config)
    save_scenario(args.out, scenario, geometry, config)
    print(f"wrote scenario ({scenario.num_sensors} sensors, "
          f"{scenario.num_elements} elements) to {args.out}")
    return 0


def _cmd_optimize(args) -> int:
    from .channels import load_scenario, perturb_csi
    from .harness import _build_method, _objective_parts
    from .rates import per_sensor_rates, resolve_weights
    from .trace import FLOAT_FMT

    scenario, _, _ = load_scenario(args.scenario)
    rng = np.random.default_rng(args.seed)
    design = scenario
    if args.beta > 0:
        design = scenario.with_channels(perturb_csi(scenario.channels, args.beta, rng))
    objective, weights_mode = _objective_parts(args.objective)
    weights = resolve_weights(design, weights_mode) if objective == "wsr" else None
    est = _build_method(args.method, objective, weights, rng, {})
    est.fit(design)
    rates = per_sensor_rates(est.psi_, scenario)
    eval_weights = weights if weights is not None else np.ones(len(rates))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    est.trace_.method = args.method
    est.trace_.seed = args.seed
    est.trace_.to_csv(out / "trace.csv")
    with open(out / "result.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "objective", "beta", "seed", "iterations"]
                        + [f"rate_{i + 1}" for i in range(len(rates))]
                        + ["wsr", "min_rate"])
        writer.writerow([args.method, args.objective, FLOAT_FMT.format(args.beta),
                         args.seed, est.n_iter_]
                        + [FLOAT_FMT.format(r) for r in rates]
                        + [FLOAT_FMT.format(float(eval_weights @ rates)),
                           FLOAT_FMT.format(float(rates.min()))])
    np.savez(out / "psi.npz", psi_re=est.psi_.real, psi_im=est.psi_.imag)
    print(f"{args.method} {args.objective}: wsr={float(eval_weights @ rates):.6g} "
          f"min_rate={float(rates.min()):.6g} -> {out}")
    return 0


def _cmd_sweep(args) -> int:
    from .harness import ExperimentSpec, run_experiment
    spec = ExperimentSpec.from_file(args.spec)
    if args.seed is not None:
        spec = ExperimentSpec(config=spec.config.replace(rng_seed=args.seed),
                              methods=spec.methods, objective=spec.objective,
                              L_values=spec.L_values, beta_values=spec.beta_values,
                              num_seeds=spec.num_seeds, output_dir=spec.output_dir,
                              method_options=spec.method_options)
    result = run_experiment(spec, out_dir=args.out)
    print(f"wrote {len(result['rows'])} rows "
          f"({result['num_failed']} failed) to {args.out}")
    if args.strict and result["num_failed"]:
        return 1
    return 0


def _cmd_report(args) -> int:
    from .harness import convergence_report, timing_report
    from .trace import SolverTrace
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out) if args.out else in_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "summary":
        src = in_dir / "summary.csv"
        if not src.exists():
            print(f"no summary.csv under {in_dir}", file=sys.stderr)
            return 1
        sys.stdout.write(src.read_text())
        return 0
    trace_files = sorted((in_dir / "traces").glob("*.csv"))
    if not trace_files:
        print(f"no trace files under {in_dir}/traces", file=sys.stderr)
        return 1
    traces = [SolverTrace.from_csv(p) for p in trace_files]
    if args.kind == "convergence":
        path = out_dir / "convergence.csv"
        convergence_report(traces, out_path=path)
    else:
        path = out_dir / "timing.csv"
        timing_report(traces, out_path=path, probe=args.probe)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risfbl",
        description="RIS reflection design for short-packet NOMA uplinks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-scenario", help="draw channels from a config file")
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--out", required=True, help="output .npz bundle")
    p.add_argument("--seed", type=int, default=None, help="override config rng_seed")
    p.set_defaults(func=_cmd_generate_scenario)

    p = sub.add_parser("optimize", help="run one method on a stored scenario")
    p.add_argument("--scenario", required=True, help="scenario .npz bundle")
    p.add_argument("--method", required=True,
                   choices=["ega", "rga", "so", "ao", "shannon-so"])
    p.add_argument("--objective", required=True,
                   choices=["wsr-equal", "wsr-fair", "min-rate"])
    p.add_argument("--beta", type=float, default=0.0, help="CSI error fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("sweep", help="run a full experiment spec")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override base seed")
    p.add_argument("--strict", action="store_true",
                   help="exit nonzero if any cell failed")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="derive reports from sweep outputs")
    p.add_argument("--in", dest="in_dir", required=True, help="sweep output directory")
    p.add_argument("--kind", required=True, choices=["convergence", "timing", "summary"])
    p.add_argument("--out", default=None, help="report output directory")
    p.add_argument("--probe", action="store_true",
                   help="include the gradient scaling probe in timing reports")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
