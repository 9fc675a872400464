"""Per-iteration solver traces and their CSV form."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

FLOAT_FMT = "{:.12g}"

TRACE_COLUMNS = ("method", "seed", "iteration", "objective", "tolerance", "step", "wall_time")


@dataclass
class SolverTrace:
    """Objective, stopping tolerance, step size and wall clock per iteration."""

    method: str = ""
    seed: int | None = None
    iterations: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    tolerances: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)

    def record(self, iteration: int, objective: float, tolerance: float,
               step: float, wall_time: float) -> None:
        if self.iterations and iteration <= self.iterations[-1]:
            raise ValueError("iterations must be strictly increasing")
        if tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        self.iterations.append(iteration)
        self.objectives.append(float(objective))
        self.tolerances.append(float(tolerance))
        self.steps.append(float(step))
        self.wall_times.append(float(wall_time))

    def __len__(self) -> int:
        return len(self.iterations)

    @property
    def final_objective(self) -> float:
        return self.objectives[-1]

    @property
    def total_wall_time(self) -> float:
        return self.wall_times[-1] if self.wall_times else 0.0

    def rows(self):
        for k, obj, tol, step, wall in zip(self.iterations, self.objectives,
                                           self.tolerances, self.steps, self.wall_times):
            yield {"method": self.method, "seed": self.seed, "iteration": k,
                   "objective": obj, "tolerance": tol, "step": step, "wall_time": wall}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for row in self.rows():
                writer.writerow([
                    row["method"],
                    "" if row["seed"] is None else row["seed"],
                    row["iteration"],
                    FLOAT_FMT.format(row["objective"]),
                    FLOAT_FMT.format(row["tolerance"]),
                    FLOAT_FMT.format(row["step"]),
                    FLOAT_FMT.format(row["wall_time"]),
                ])

    @classmethod
    def from_csv(cls, path) -> "SolverTrace":
        trace = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                if not trace.method:
                    trace.method = row["method"]
                    trace.seed = int(row["seed"]) if row["seed"] else None
                trace.iterations.append(int(row["iteration"]))
                trace.objectives.append(float(row["objective"]))
                trace.tolerances.append(float(row["tolerance"]))
                trace.steps.append(float(row["step"]))
                trace.wall_times.append(float(row["wall_time"]))
        return trace
