"""Command-line entry points.

Four subcommands cover the workflows: ``simulate`` writes pattern CSVs,
``estimate`` fits one model to a pattern CSV and dumps it on a lattice,
``benchmark`` runs a Monte Carlo plan, and ``compare`` runs the real-data
pairwise comparison.  Exit codes: 0 success, 2 configuration problem,
3 data problem, 4 resource-guard rejection.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from intensor.basis import PartitionSpec
from intensor.config import (
    load_benchmark_plan,
    load_compare_settings,
    load_estimate_settings,
    load_simulate_settings,
)
from intensor.errors import ConfigError, DataError, ResourceLimitError
from intensor.estimate import EstimatorConfig, cluster_partition, fit_intensity
from intensor.harness import (
    GridSpec,
    default_grid,
    read_pattern_csv,
    realdata_compare,
    run_benchmark,
    write_pattern_csv,
)
from intensor.kie import kie_evaluate, kie_fit
from intensor.simulate import (
    PointPattern,
    ScenarioSpec,
    sample_lgcp,
    sample_neyman_scott,
    sample_poisson,
    scenario_intensity,
    scenario_sup,
    substream,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intensor",
        description="Low-rank intensity estimation for replicated spatial point patterns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, descr in (
        ("simulate", "draw point patterns and write them as a CSV"),
        ("estimate", "fit one intensity model to a pattern CSV"),
        ("benchmark", "run a Monte Carlo benchmark plan"),
        ("compare", "pairwise method comparison on a real-data CSV"),
    ):
        cmd = sub.add_parser(name, help=descr)
        cmd.add_argument("--config", metavar="PATH", help="INI configuration file")
        cmd.add_argument("--preset", metavar="NAME", help="bundled configuration name")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument(
            "--out", metavar="DIR", default="intensor-out", help="output directory"
        )
        cmd.add_argument(
            "--threads", type=int, default=None, help="worker processes (benchmark)"
        )
    return parser


def list_presets() -> list[str]:
    base = resources.files("intensor").joinpath("presets")
    return sorted(p.name[:-4] for p in base.iterdir() if p.name.endswith(".ini"))


def _config_path(args) -> Path:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("give exactly one of --config PATH or --preset NAME")
    if args.config:
        return Path(args.config)
    base = resources.files("intensor").joinpath("presets")
    candidate = base.joinpath(args.preset + ".ini")
    if not candidate.is_file():
        raise ConfigError(
            f"no preset named {args.preset!r}; available: {', '.join(list_presets())}"
        )
    return Path(str(candidate))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    settings = load_simulate_settings(_config_path(args))
    if args.seed is not None:
        settings = dataclasses.replace(settings, seed=args.seed)
    out = _out_dir(args)
    rng = substream(settings.seed, 0)
    field = None
    if settings.process == "neyman_scott":
        patterns = sample_neyman_scott(
            settings.dim,
            settings.n,
            settings.parent_rate,
            settings.offspring_mean,
            settings.kernel_sd,
            rng,
        )
    elif settings.scenario == 4:
        patterns, field = sample_lgcp(settings.dim, settings.n, rng, settings.grid_res)
    else:
        spec = ScenarioSpec(settings.scenario, settings.dim, settings.amplitude)
        patterns = sample_poisson(
            lambda p: scenario_intensity(spec, p),
            scenario_sup(spec),
            settings.dim,
            settings.n,
            rng,
        )
    write_pattern_csv(out / "patterns.csv", patterns)
    total = sum(p.n for p in patterns)
    print(f"wrote {out / 'patterns.csv'}: {len(patterns)} patterns, {total} points")
    if field is not None:
        _dump_field(out / "field.csv", field)
        print(f"wrote {out / 'field.csv'}: realized intensity on the sampling grid")
    return 0


def _dump_field(path: Path, field) -> None:
    mesh = np.meshgrid(*([field.nodes] * field.dim), indexing="ij")
    cols = [m.reshape(-1, order="F") for m in mesh]
    pts = np.column_stack(cols)
    vals = field.interpolate(pts)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(f"x{d + 1}" for d in range(field.dim)) + ",intensity\n")
        for row, v in zip(pts, vals):
            fh.write(",".join(repr(float(c)) for c in row) + f",{float(v)!r}\n")


def _cmd_estimate(args) -> int:
    settings = load_estimate_settings(_config_path(args))
    if args.seed is not None:
        settings = dataclasses.replace(settings, seed=args.seed)
    out = _out_dir(args)
    patterns = read_pattern_csv(settings.patterns)
    if not patterns:
        raise DataError(f"{settings.patterns}: no patterns")
    dim = patterns[0].dim
    grid = GridSpec(settings.grid_g, dim) if settings.grid_g else default_grid(dim)
    pts = grid.points()
    if settings.method == "kie":
        model = kie_fit(patterns)
        values = kie_evaluate(model, pts)
        np.savez(
            out / "model.npz",
            method="kie",
            points=model.points,
            bandwidth=model.bandwidth,
            n=model.n,
        )
    else:
        if settings.block_dims is not None:
            perm, part = np.arange(dim), PartitionSpec(settings.block_dims)
        else:
            perm, part = cluster_partition(patterns, settings.s)
        permuted = [PointPattern(p.points[:, perm], dim) for p in patterns]
        cfg = EstimatorConfig(
            partition=part,
            m=settings.m,
            method=settings.method,
            gamma=settings.gamma,
            gamma_scale=settings.gamma_scale,
            ranks=settings.ranks,
            tau=settings.tau,
            sample_split=settings.sample_split,
            seed=settings.seed,
            clip_negative=settings.clip_negative,
        )
        model = fit_intensity(cfg, permuted, rng=substream(settings.seed, 7841))
        values = model(pts[:, perm])
        np.savez(
            out / "model.npz",
            method=settings.method,
            coefficients=model.coefficients,
            block_dims=np.array(part.block_dims),
            m=settings.m,
            perm=perm,
        )
    header = ",".join(f"x{d + 1}" for d in range(dim)) + ",estimate"
    truth_vals = None
    if settings.scenario is not None and settings.scenario != 4:
        spec = ScenarioSpec(settings.scenario, dim, settings.amplitude)
        truth_vals = scenario_intensity(spec, pts)
        header += ",truth"
    with (out / "grid.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i, row in enumerate(pts):
            line = ",".join(repr(float(c)) for c in row) + f",{float(values[i])!r}"
            if truth_vals is not None:
                line += f",{float(truth_vals[i])!r}"
            fh.write(line + "\n")
    print(f"fitted {settings.method} on {len(patterns)} patterns "
          f"({sum(p.n for p in patterns)} points)")
    print(f"wrote {out / 'model.npz'} and {out / 'grid.csv'} ({pts.shape[0]} rows)")
    return 0


def _cmd_benchmark(args) -> int:
    plan = load_benchmark_plan(_config_path(args))
    if args.seed is not None:
        plan = dataclasses.replace(plan, seed=args.seed)
    if args.threads is not None:
        plan = dataclasses.replace(plan, threads=args.threads)
    out = _out_dir(args)
    results = run_benchmark(plan, out_dir=out)
    width = max(len(r.method) for r in results)
    print(f"{'scenario':>8} {'D':>2} {'s':>2} {'m':>2} {'method':>{width}} "
          f"{'n':>6} {'mean':>8} {'se':>8} {'sec':>7}")
    for r in results:
        print(
            f"{r.scenario:>8} {r.dim:>2} {r.s:>2} {r.m:>2} {r.method:>{width}} "
            f"{r.n:>6} {r.mean_rel_err:>8.4f} {r.se_rel_err:>8.4f} {r.seconds:>7.2f}"
        )
    print(f"wrote {out / 'results.csv'} and {out / 'details.csv'}")
    return 0


def _cmd_compare(args) -> int:
    settings = load_compare_settings(_config_path(args))
    seed = settings.seed if args.seed is None else args.seed
    out = _out_dir(args)
    result = realdata_compare(
        settings.data,
        settings.methods,
        split_fraction=settings.split_fraction,
        repeats=settings.repeats,
        seed=seed,
        grid_g=settings.grid_g,
        out_dir=out,
    )
    width = max(max(len(n) for n in result.names), 8)
    print(f"pairwise relative errors over {result.repeats} splits "
          f"({result.grid_kind} evaluation points); entry (row, col) is "
          f"|row - col| / |col|")
    print(" " * width + "  " + "  ".join(f"{n:>{width}}" for n in result.names))
    for i, name in enumerate(result.names):
        cells = "  ".join(f"{v:>{width}.4f}" for v in result.matrix[i])
        print(f"{name:>{width}}  {cells}")
    print(f"wrote {out / 'pairwise.csv'}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "benchmark": _cmd_benchmark,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ResourceLimitError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
