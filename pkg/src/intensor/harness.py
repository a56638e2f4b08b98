"""Benchmark driver, error metrics, and CSV ingestion.

Runs Monte Carlo grids of (scenario, dimension, blocks, basis size, method)
cells, scoring every fitted model by relative L2 error on a midpoint
lattice.  Also ingests user CSVs (min-max normalized into the unit cube)
and runs the train/test pairwise-comparison workflow on them.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from intensor.basis import PartitionSpec
from intensor.errors import DataError, ResourceLimitError
from intensor.estimate import (
    COEFFICIENT_BUDGET,
    EstimatorConfig,
    cluster_partition,
    empirical_coefficients,
    fit_intensity,
)
from intensor.kie import kie_evaluate, kie_fit
from intensor.simulate import (
    PointPattern,
    ScenarioSpec,
    sample_lgcp,
    sample_poisson,
    scenario_intensity,
    scenario_sup,
    substream,
)

LATTICE_BUDGET = 80_000_000  # total floats a test lattice may hold
COMPARE_LATTICE_LIMIT = 100_000  # beyond this, switch to a low-discrepancy set
SOBOL_POINTS = 10_000
METHOD_NAMES = ("raw", "matrix_svt", "tensor", "kie")
RESULTS_HEADER = "scenario,D,s,m,method,n,reps,mean_rel_err,se_rel_err,seconds"
DETAILS_HEADER = "scenario,D,s,m,method,n,rep,rel_err"


@dataclass(frozen=True)
class GridSpec:
    """Regular lattice of ``g`` cell midpoints per axis in the unit cube."""

    g: int
    dim: int

    def __post_init__(self):
        if self.g < 2:
            raise ValueError("need at least two lattice points per axis")
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    def points(self) -> np.ndarray:
        """The ``g**dim`` midpoints, first coordinate varying fastest."""
        if self.g**self.dim * self.dim > LATTICE_BUDGET:
            raise ResourceLimitError(
                f"lattice with {self.g}^{self.dim} points exceeds the memory "
                f"budget; reduce the per-axis resolution g or the dimension"
            )
        axis = (np.arange(self.g) + 0.5) / self.g
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        cols = [m.reshape(-1, order="F") for m in mesh]
        return np.column_stack(cols)


def default_grid(dim: int) -> GridSpec:
    """Ten points per axis, reduced to six in dimension six and above so the
    lattice stays within the memory budget."""
    return GridSpec(10 if dim <= 5 else 6, dim)


def _values_on(fn_or_values, pts: np.ndarray) -> np.ndarray:
    vals = fn_or_values(pts) if callable(fn_or_values) else fn_or_values
    vals = np.asarray(vals, dtype=float).ravel()
    if vals.shape != (pts.shape[0],):
        raise ValueError(f"expected {pts.shape[0]} values, got shape {vals.shape}")
    return vals


def relative_error(estimate, truth, grid: GridSpec) -> float:
    """Discrete relative L2 error of ``estimate`` against ``truth``.

    Both arguments are either callables on (P, dim) point arrays or
    precomputed value vectors for ``grid.points()``.
    """
    pts = grid.points()
    ev = _values_on(estimate, pts)
    tv = _values_on(truth, pts)
    denom = float(np.linalg.norm(tv))
    if denom == 0.0:
        raise ValueError("truth is identically zero on the lattice")
    return float(np.linalg.norm(ev - tv) / denom)


def pairwise_relative_error(est1, est2, grid: GridSpec) -> float:
    """Relative L2 distance of two fits; the second argument normalizes,
    so the value is asymmetric."""
    pts = grid.points()
    v1 = _values_on(est1, pts)
    v2 = _values_on(est2, pts)
    denom = float(np.linalg.norm(v2))
    if denom == 0.0:
        raise ValueError("second model is identically zero on the lattice")
    return float(np.linalg.norm(v1 - v2) / denom)


@dataclass(frozen=True)
class CellSpec:
    """One benchmark cell: a data-generating setting plus estimator knobs."""

    scenario: int
    dim: int
    n: int
    s: int
    m: int
    amplitude: float = 1.0
    methods: tuple[str, ...] = ("matrix_svt", "kie")
    gamma: object = "theory"
    gamma_scale: float = 1.0
    ranks: tuple[int, ...] | None = None
    tau: float = 2.0
    sample_split: bool = False
    block_dims: tuple[int, ...] | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.ranks is not None:
            object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if self.block_dims is not None:
            object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        if isinstance(self.gamma, (list, np.ndarray)):
            object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.scenario not in (1, 2, 3, 4):
            raise ValueError(f"unknown scenario {self.scenario}")
        if self.dim < 1 or self.n < 1 or self.m < 1:
            raise ValueError("dim, n, and m must be positive")
        if not 1 <= self.s <= self.dim:
            raise ValueError(f"block count must lie in [1, {self.dim}]")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.gamma_scale <= 0:
            raise ValueError("gamma_scale must be positive")
        if not self.methods:
            raise ValueError("need at least one method")
        for meth in self.methods:
            if meth not in METHOD_NAMES:
                raise ValueError(f"unknown method {meth!r}; choose from {METHOD_NAMES}")
        if "matrix_svt" in self.methods and self.s != 2:
            raise ValueError("matrix_svt needs exactly two blocks (s=2)")
        if "tensor" in self.methods and self.s < 2:
            raise ValueError("tensor estimation needs at least two blocks")
        if self.block_dims is not None:
            if len(self.block_dims) != self.s or sum(self.block_dims) != self.dim:
                raise ValueError(
                    f"block_dims {self.block_dims} must have {self.s} entries summing to {self.dim}"
                )
        if self.ranks is not None and len(self.ranks) != self.s:
            raise ValueError(f"need {self.s} ranks, got {len(self.ranks)}")


@dataclass(frozen=True)
class BenchmarkPlan:
    """A benchmark run: cells, replication count, master seed, lattice size."""

    cells: tuple[CellSpec, ...]
    replications: int = 20
    seed: int = 0
    grid_g: int | None = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ValueError("need at least one cell")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    def grid_for(self, dim: int) -> GridSpec:
        return GridSpec(self.grid_g, dim) if self.grid_g else default_grid(dim)


@dataclass
class BenchmarkResult:
    """Aggregated scores of one (cell, method) combination."""

    scenario: int
    dim: int
    s: int
    m: int
    method: str
    n: int
    reps: int
    errors: np.ndarray
    seconds: float

    @property
    def mean_rel_err(self) -> float:
        return float(self.errors.mean())

    @property
    def se_rel_err(self) -> float:
        if self.reps < 2:
            return 0.0
        return float(self.errors.std(ddof=1) / math.sqrt(self.reps))


def _auto_gamma_grid(
    patterns: Sequence[PointPattern], partition: PartitionSpec, m: int
) -> tuple[float, ...]:
    """Log-spaced candidate levels spanning the singular-value range of the
    pooled coefficient matrix."""
    bhat = empirical_coefficients(patterns, partition, m)
    top = float(np.linalg.svd(bhat, compute_uv=False)[0])
    if top <= 0.0:
        return (0.0,)
    return tuple(np.geomspace(0.01 * top, top, 12))


def _simulate_cell(cell: CellSpec, rng: np.random.Generator, grid_pts: np.ndarray):
    """Patterns plus truth values on the lattice for one replication."""
    if cell.scenario == 4:
        patterns, fld = sample_lgcp(cell.dim, cell.n, rng)
        return patterns, fld.interpolate(grid_pts)
    spec = ScenarioSpec(cell.scenario, cell.dim, cell.amplitude)
    patterns = sample_poisson(
        lambda p: scenario_intensity(spec, p), scenario_sup(spec), cell.dim, cell.n, rng
    )
    return patterns, scenario_intensity(spec, grid_pts)


def _fit_and_score(
    cell: CellSpec,
    method: str,
    patterns: Sequence[PointPattern],
    grid_pts: np.ndarray,
    truth_vals: np.ndarray,
    perm: np.ndarray,
    part: PartitionSpec | None,
    cv_seed: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    start = time.perf_counter()
    if method == "kie":
        vals = kie_evaluate(kie_fit(patterns), grid_pts)
    else:
        pats = [PointPattern(p.points[:, perm], cell.dim) for p in patterns]
        gamma = cell.gamma
        if gamma == "auto":
            gamma = _auto_gamma_grid(pats, part, cell.m)
        cfg = EstimatorConfig(
            partition=part,
            m=cell.m,
            method=method,
            gamma=gamma,
            gamma_scale=cell.gamma_scale,
            ranks=cell.ranks,
            tau=cell.tau,
            sample_split=cell.sample_split,
            seed=cv_seed,
        )
        model = fit_intensity(cfg, pats, rng=rng)
        vals = model(grid_pts[:, perm])
    denom = float(np.linalg.norm(truth_vals))
    err = float(np.linalg.norm(vals - truth_vals) / denom)
    return err, time.perf_counter() - start


def _run_unit(args: tuple[BenchmarkPlan, int, int]) -> tuple[int, int, dict]:
    """One (cell, replication) unit: simulate once, fit every method."""
    plan, ci, rep = args
    cell = plan.cells[ci]
    grid_pts = plan.grid_for(cell.dim).points()
    patterns, truth_vals = _simulate_cell(cell, substream(plan.seed, ci, rep), grid_pts)
    if any(meth != "kie" for meth in cell.methods):
        if cell.block_dims is not None:
            perm, part = np.arange(cell.dim), PartitionSpec(cell.block_dims)
        else:
            perm, part = cluster_partition(patterns, cell.s)
    else:
        perm, part = np.arange(cell.dim), None
    cv_seed = ((plan.seed % 2**32) * 1_000_003 + ci * 8191 + rep) % 2**63
    scores = {}
    for mi, method in enumerate(cell.methods):
        scores[method] = _fit_and_score(
            cell,
            method,
            patterns,
            grid_pts,
            truth_vals,
            perm,
            part,
            cv_seed,
            substream(plan.seed, ci, rep, 983 + mi),
        )
    return ci, rep, scores


def run_benchmark(
    plan: BenchmarkPlan, out_dir: str | Path | None = None
) -> list[BenchmarkResult]:
    """Run every cell of the plan; optionally emit results/details CSVs.

    Replications of all cells execute independently (in processes when
    ``plan.threads > 1``); per-replication errors are reassembled in
    replication order, so the scores are a pure function of the plan.
    Wall-clock seconds are the one column that varies run to run.
    """
    for cell in plan.cells:
        if cell.m**cell.dim > COEFFICIENT_BUDGET:
            raise ResourceLimitError(
                f"cell {cell.label or cell.scenario}: coefficient tensor has "
                f"m^D = {cell.m}^{cell.dim} entries, over the "
                f"{COEFFICIENT_BUDGET:.0e} budget; reduce the basis size m"
            )
        plan.grid_for(cell.dim).points()  # validates the lattice budget
    units = [(plan, ci, rep) for ci in range(len(plan.cells)) for rep in range(plan.replications)]
    if plan.threads > 1:
        with ProcessPoolExecutor(max_workers=plan.threads) as pool:
            outcomes = list(pool.map(_run_unit, units))
    else:
        outcomes = [_run_unit(u) for u in units]
    store: dict[tuple[int, int], dict] = {(ci, rep): sc for ci, rep, sc in outcomes}
    results = []
    for ci, cell in enumerate(plan.cells):
        for method in cell.methods:
            per_rep = [store[(ci, rep)][method] for rep in range(plan.replications)]
            results.append(
                BenchmarkResult(
                    scenario=cell.scenario,
                    dim=cell.dim,
                    s=cell.s,
                    m=cell.m,
                    method=method,
                    n=cell.n,
                    reps=plan.replications,
                    errors=np.array([e for e, _ in per_rep]),
                    seconds=float(sum(t for _, t in per_rep)),
                )
            )
    if out_dir is not None:
        write_benchmark_csvs(results, out_dir)
    return results


def write_benchmark_csvs(results: Sequence[BenchmarkResult], out_dir: str | Path) -> None:
    """Emit ``results.csv`` (one row per cell and method) and ``details.csv``
    (one row per replication, timing-free so reruns are byte-identical)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for r in results:
            fh.write(
                f"{r.scenario},{r.dim},{r.s},{r.m},{r.method},{r.n},{r.reps},"
                f"{r.mean_rel_err!r},{r.se_rel_err!r},{r.seconds:.3f}\n"
            )
    with (out / "details.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write(DETAILS_HEADER + "\n")
        for r in results:
            for rep, err in enumerate(r.errors):
                fh.write(
                    f"{r.scenario},{r.dim},{r.s},{r.m},{r.method},{r.n},{rep},{float(err)!r}\n"
                )


def write_pattern_csv(path: str | Path, patterns: Sequence[PointPattern]) -> None:
    """Write patterns as ``rep,x1,...,xD`` rows (UTF-8, LF endings)."""
    if not patterns:
        raise ValueError("need at least one pattern")
    dim = patterns[0].dim
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("rep," + ",".join(f"x{d + 1}" for d in range(dim)) + "\n")
        for i, pat in enumerate(patterns):
            for row in pat.points:
                fh.write(f"{i}," + ",".join(repr(float(v)) for v in row) + "\n")


def read_pattern_csv(path: str | Path) -> list[PointPattern]:
    """Read a ``rep,x1,...,xD`` file back into patterns.

    Replication ids are nonnegative integers; ids missing from the file
    (patterns that happened to be empty) are restored as empty patterns so
    the replication count survives a round trip.
    """
    try:
        with Path(path).open(newline="", encoding="utf-8-sig") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header = rows[0]
    dim = len(header) - 1
    if dim < 1 or header[0] != "rep" or header[1:] != [f"x{d + 1}" for d in range(dim)]:
        raise DataError(
            f"{path}: expected header rep,x1,...,xD, got {','.join(header)}"
        )
    by_rep: dict[int, list[list[float]]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != dim + 1:
            raise DataError(f"{path}:{lineno}: expected {dim + 1} fields")
        try:
            rep = int(row[0])
            coords = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if rep < 0:
            raise DataError(f"{path}:{lineno}: replication ids must be nonnegative")
        if min(coords) < 0.0 or max(coords) > 1.0:
            raise DataError(f"{path}:{lineno}: coordinates must lie in [0, 1]")
        by_rep.setdefault(rep, []).append(coords)
    if not by_rep:
        return []
    count = max(by_rep) + 1
    return [
        PointPattern(np.array(by_rep.get(r, np.empty((0, dim)))), dim)
        for r in range(count)
    ]


@dataclass
class IngestResult:
    """Normalized patterns plus the affine record to undo the normalization."""

    patterns: list[PointPattern]
    offsets: np.ndarray
    scales: np.ndarray
    dropped: int
    coord_columns: tuple[str, ...]

    def denormalize(self, points: np.ndarray) -> np.ndarray:
        """Map unit-cube coordinates back to the original units."""
        return np.asarray(points, dtype=float) * self.scales + self.offsets


def _parses_float(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def ingest_csv(
    path: str | Path,
    coord_columns: Sequence[str] | None = None,
    group_column: str | None = None,
) -> IngestResult:
    """Load a generic CSV of locations, min-max normalized to the unit cube.

    Coordinate columns default to those whose non-empty cells are mostly
    numeric; rows with a missing or unparsable coordinate (or group) cell
    are dropped and counted.  A ``group_column`` splits rows into one
    pattern per distinct value, in order of first appearance.
    """
    try:
        with Path(path).open(newline="", encoding="utf-8-sig") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{path}: no data rows")
    header, data = rows[0], rows[1:]
    index = {name: i for i, name in enumerate(header)}
    if group_column is not None and group_column not in index:
        raise DataError(f"{path}: no column named {group_column!r}")
    if coord_columns is None:
        chosen = []
        for name in header:
            if name == group_column:
                continue
            cells = [r[index[name]] for r in data if len(r) > index[name]]
            filled = [c for c in cells if c.strip()]
            numeric = sum(_parses_float(c) for c in filled)
            if filled and numeric * 2 > len(filled):
                chosen.append(name)
        coord_columns = tuple(chosen)
    else:
        coord_columns = tuple(coord_columns)
        for name in coord_columns:
            if name not in index:
                raise DataError(f"{path}: no column named {name!r}")
    if not coord_columns:
        raise DataError(f"{path}: no numeric coordinate columns found")
    cols = [index[c] for c in coord_columns]
    gcol = index[group_column] if group_column is not None else None
    raw_points, groups, dropped = [], [], 0
    for row in data:
        try:
            coords = [float(row[c]) for c in cols]
        except (ValueError, IndexError):
            dropped += 1
            continue
        if gcol is not None:
            if len(row) <= gcol or not row[gcol].strip():
                dropped += 1
                continue
            groups.append(row[gcol])
        raw_points.append(coords)
    if not raw_points:
        raise DataError(f"{path}: every row was dropped")
    raw = np.asarray(raw_points)
    offsets = raw.min(axis=0)
    scales = raw.max(axis=0) - offsets
    flat = scales == 0
    if np.any(flat):
        names = [coord_columns[i] for i in np.nonzero(flat)[0]]
        raise DataError(f"{path}: constant coordinate column(s) {names} cannot be normalized")
    unit = (raw - offsets) / scales
    dim = unit.shape[1]
    if gcol is None:
        patterns = [PointPattern(unit, dim)]
    else:
        order = list(dict.fromkeys(groups))
        patterns = [
            PointPattern(unit[[i for i, g in enumerate(groups) if g == key]], dim)
            for key in order
        ]
    return IngestResult(patterns, offsets, scales, dropped, coord_columns)


@dataclass(frozen=True)
class CompareMethod:
    """One entrant in the real-data pairwise comparison."""

    name: str
    kind: str
    s: int = 2
    m: int = 6
    gamma: object = "auto"
    ranks: tuple[int, ...] | None = None
    tau: float = 2.0

    def __post_init__(self):
        if self.kind not in METHOD_NAMES:
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.ranks is not None:
            object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if isinstance(self.gamma, (list, np.ndarray)):
            object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))


@dataclass
class CompareResult:
    """Averaged pairwise relative errors; entry (i, j) normalizes by j."""

    matrix: np.ndarray
    names: tuple[str, ...]
    grid_kind: str
    repeats: int


def _compare_eval_points(dim: int, grid_g: int, seed: int) -> tuple[np.ndarray, str]:
    if grid_g**dim <= COMPARE_LATTICE_LIMIT:
        return GridSpec(grid_g, dim).points(), "lattice"
    from scipy.stats import qmc

    sob = qmc.Sobol(d=dim, scramble=True, seed=substream(seed, 424242))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # point count is deliberately not 2^k
        pts = sob.random(SOBOL_POINTS)
    return pts, "sobol"


def _compare_fit_values(
    method: CompareMethod,
    train: PointPattern,
    eval_pts: np.ndarray,
    split_fraction: float,
    cv_seed: int,
    rng: np.random.Generator,
) -> np.ndarray:
    if method.kind == "kie":
        vals = kie_evaluate(kie_fit([train]), eval_pts)
    else:
        perm, part = cluster_partition([train], method.s)
        pat = PointPattern(train.points[:, perm], train.dim)
        gamma = method.gamma
        if gamma == "auto":
            gamma = _auto_gamma_grid([pat], part, method.m)
        cfg = EstimatorConfig(
            partition=part,
            m=method.m,
            method=method.kind,
            gamma=gamma,
            ranks=method.ranks,
            tau=method.tau,
            sample_split=method.kind == "tensor",
            seed=cv_seed,
        )
        model = fit_intensity(cfg, [pat], rng=rng)
        vals = model(eval_pts[:, perm])
    # a fit on the thinned training set estimates the thinned intensity
    return vals / split_fraction


def realdata_compare(
    path: str | Path,
    methods: Sequence[CompareMethod],
    split_fraction: float = 0.75,
    repeats: int = 30,
    seed: int = 0,
    grid_g: int | None = None,
    out_dir: str | Path | None = None,
) -> CompareResult:
    """Pairwise-comparison workflow on a user CSV.

    Every repeat thins the pooled points into a training subset, fits each
    method on it (rescaled by the kept fraction), and accumulates pairwise
    relative errors between the fits on a shared evaluation point set.
    """
    if len(methods) < 2:
        raise ValueError("need at least two methods to compare")
    if not 0.0 < split_fraction < 1.0:
        raise ValueError("split fraction must lie strictly between 0 and 1")
    if repeats < 1:
        raise ValueError("need at least one repeat")
    ingested = ingest_csv(path)
    pooled = np.concatenate([p.points for p in ingested.patterns], axis=0)
    total, dim = pooled.shape
    if total < 20:
        raise DataError(f"{path}: {total} usable points are too few to split and fit")
    eval_pts, grid_kind = _compare_eval_points(dim, grid_g or default_grid(dim).g, seed)
    k = len(methods)
    matrix = np.zeros((k, k))
    for r in range(repeats):
        rng = substream(seed, 1000 + r)
        keep = rng.random(total) < split_fraction
        train = PointPattern(pooled[keep], dim)
        values = [
            _compare_fit_values(
                meth,
                train,
                eval_pts,
                split_fraction,
                cv_seed=seed * 10007 + r * 101 + mi,
                rng=substream(seed, 2000 + r, mi),
            )
            for mi, meth in enumerate(methods)
        ]
        for j, vj in enumerate(values):
            denom = float(np.linalg.norm(vj))
            if denom == 0.0:
                raise ValueError(f"method {methods[j].name!r} fit identically zero")
            for i, vi in enumerate(values):
                matrix[i, j] += float(np.linalg.norm(vi - vj) / denom)
    matrix /= repeats
    result = CompareResult(matrix, tuple(m.name for m in methods), grid_kind, repeats)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "pairwise.csv").open("w", newline="", encoding="utf-8") as fh:
            fh.write("method," + ",".join(result.names) + "\n")
            for i, name in enumerate(result.names):
                fh.write(name + "," + ",".join(repr(float(v)) for v in matrix[i]) + "\n")
    return result
