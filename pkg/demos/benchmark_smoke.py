"""Run the bundled smoke benchmark preset and print the score table.

The smoke preset covers both estimator families on tiny cells (a few
seconds end to end) and demonstrates the plan -> results -> CSV workflow.
The equivalent command line is:  intensor benchmark --preset smoke

Run:  python3 demos/benchmark_smoke.py
"""

import importlib.resources
import tempfile
from pathlib import Path

from intensor.config import load_benchmark_plan
from intensor.harness import run_benchmark

root = importlib.resources.files("intensor.presets")
with importlib.resources.as_file(root / "smoke.ini") as path:
    plan = load_benchmark_plan(path)

print(f"{len(plan.cells)} cells, {plan.replications} replications, seed {plan.seed}")

out_dir = Path(tempfile.mkdtemp(prefix="intensor-smoke-"))
results = run_benchmark(plan, out_dir=out_dir)

print(f"{'scenario':>8s} {'D':>2s} {'m':>2s} {'method':>10s} {'mean':>8s} {'se':>8s}")
for r in results:
    print(
        f"{r.scenario:>8d} {r.dim:>2d} {r.m:>2d} {r.method:>10s} "
        f"{r.mean_rel_err:>8.4f} {r.se_rel_err:>8.4f}"
    )
print(f"CSVs written to {out_dir}")
