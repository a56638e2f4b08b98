"""Low-rank intensity estimators and their tuning helpers.

The empirical coefficient tensor averages block basis evaluations over the
observed points; by Campbell's formula it is unbiased for the projection
coefficients of the true intensity.  Two blocks are denoised by soft
singular value thresholding; three or more blocks get a sketched Tucker
projection (spectral initialization, one sketched refinement pass, then a
projection of the coefficient tensor onto selected subspaces).
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from intensor.basis import IntensityModel, PartitionSpec, block_basis_matrices
from intensor.errors import ResourceLimitError
from intensor.simulate import PointPattern, substream, thin_split
from intensor.tensors import (
    complete_orthonormal,
    kron_factors,
    matricize,
    soft_threshold_svd,
    truncated_svd,
    tucker_project,
)

COEFFICIENT_BUDGET = 100_000_000
_EINSUM_CHUNK_ELEMENTS = 10_000_000


def _check_patterns(patterns: Sequence[PointPattern], partition: PartitionSpec) -> None:
    if len(patterns) == 0:
        raise ValueError("need at least one pattern")
    for p in patterns:
        if p.dim != partition.dim:
            raise ValueError(f"pattern dimension {p.dim} does not match partition {partition.dim}")


def _basis_sum(points: np.ndarray, partition: PartitionSpec, m: int) -> np.ndarray:
    """Sum over points of the outer product of block basis vectors."""
    sizes = partition.block_sizes(m)
    out = np.zeros(sizes)
    if points.shape[0] == 0:
        return out
    pair = 1
    if len(sizes) >= 2:
        top = sorted(sizes)[-2:]
        pair = top[0] * top[1]
    chunk = int(np.clip(_EINSUM_CHUNK_ELEMENTS // pair, 500, 200_000))
    letters = "abcdefgh"[: len(sizes)]
    sub = ",".join("p" + c for c in letters) + "->" + letters
    for start in range(0, points.shape[0], chunk):
        mats = block_basis_matrices(partition, m, points[start : start + chunk])
        if len(mats) == 1:
            out += mats[0].sum(axis=0)
        elif len(mats) == 2:
            out += mats[0].T @ mats[1]
        else:
            out += np.einsum(sub, *mats, optimize=True)
    return out


def empirical_coefficients(
    patterns: Sequence[PointPattern], partition: PartitionSpec, m: int
) -> np.ndarray:
    """Empirical basis coefficients of the intensity, an order-``s`` tensor.

    Entry ``(mu_1, ..., mu_s)`` is the average over patterns of
    ``sum_u prod_j phi_{mu_j}(u_j)``; its expectation equals the L2
    projection coefficient of the intensity onto that basis product.
    """
    _check_patterns(patterns, partition)
    if m < 1:
        raise ValueError("basis size must be at least 1")
    if int(np.prod(partition.block_sizes(m), dtype=np.int64)) > COEFFICIENT_BUDGET:
        raise ResourceLimitError(
            f"coefficient tensor with m={m} and blocks {partition.block_dims} "
            f"exceeds the {COEFFICIENT_BUDGET:.0e}-entry budget"
        )
    pooled = np.concatenate([p.points for p in patterns], axis=0)
    return _basis_sum(pooled, partition, m) / len(patterns)


def _group_sums(
    patterns: Sequence[PointPattern],
    partition: PartitionSpec,
    m: int,
    labels: np.ndarray,
    k: int,
) -> tuple[np.ndarray, np.ndarray]:
    sizes = partition.block_sizes(m)
    sums = np.zeros((k,) + sizes)
    counts = np.zeros(k, dtype=int)
    for g in range(k):
        members = [p.points for p, lab in zip(patterns, labels) if lab == g]
        counts[g] = len(members)
        if members:
            sums[g] = _basis_sum(np.concatenate(members, axis=0), partition, m)
    return sums, counts


def matrix_svt_estimate(
    patterns: Sequence[PointPattern],
    partition: PartitionSpec,
    m: int,
    gamma: float,
) -> IntensityModel:
    """Soft singular value thresholding of the empirical coefficient matrix."""
    if partition.s != 2:
        raise ValueError("soft-SVT estimation needs exactly two coordinate blocks")
    bhat = empirical_coefficients(patterns, partition, m)
    return IntensityModel(partition, m, soft_threshold_svd(bhat, gamma))


def _factor_for(mat: np.ndarray, rank: int) -> np.ndarray:
    usable = min(rank, min(mat.shape))
    u = truncated_svd(mat, usable).U
    if usable < rank:
        u = complete_orthonormal(u, rank)
    return u


def _tucker_stage(
    b_init: np.ndarray,
    b_sketch: np.ndarray,
    b_project: np.ndarray,
    ranks: Sequence[int],
) -> np.ndarray:
    """Spectral init on ``b_init``, sketched refinement on ``b_sketch``,
    subspace projection of ``b_project``."""
    s = b_init.ndim
    init = [_factor_for(matricize(b_init, j), ranks[j]) for j in range(s)]
    refined = []
    for j in range(s):
        sketch = matricize(b_sketch, j) @ kron_factors([init[k] for k in range(s) if k != j])
        refined.append(_factor_for(sketch, ranks[j]))
    return tucker_project(b_project, refined)


def tensor_estimate(
    patterns: Sequence[PointPattern],
    partition: PartitionSpec,
    m: int,
    ranks: Sequence[int],
    sample_split: bool = False,
    rng: np.random.Generator | None = None,
) -> IntensityModel:
    """Sketched Tucker estimate of the coefficient tensor.

    With ``sample_split`` the three stages see independent data: patterns
    are dealt round-robin into three groups when at least three are
    available, and otherwise each pattern is thinned into three parts
    (each estimating a third of the intensity, so the result is rescaled
    by three).  Without splitting all stages share the pooled tensor.
    """
    _check_patterns(patterns, partition)
    if partition.s < 3:
        raise ValueError("tensor estimation needs at least three blocks; use matrix_svt_estimate")
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != partition.s:
        raise ValueError(f"need {partition.s} ranks, got {len(ranks)}")
    sizes = partition.block_sizes(m)
    for r, p in zip(ranks, sizes):
        if not 1 <= r <= p:
            raise ValueError(f"rank {r} outside [1, {p}]")
    scale = 1.0
    if not sample_split:
        bhat = empirical_coefficients(patterns, partition, m)
        parts = (bhat, bhat, bhat)
    elif len(patterns) >= 3:
        labels = np.arange(len(patterns)) % 3
        sums, counts = _group_sums(patterns, partition, m, labels, 3)
        parts = tuple(sums[g] / counts[g] for g in range(3))
    else:
        if rng is None:
            raise ValueError("splitting fewer than three patterns thins them and needs an rng")
        thirds: list[list[PointPattern]] = [[], [], []]
        for p in patterns:
            for g, part in enumerate(thin_split(p, 3, rng)):
                thirds[g].append(part)
        parts = tuple(
            empirical_coefficients(third, partition, m) for third in thirds
        )
        scale = 3.0
    coeffs = scale * _tucker_stage(parts[0], parts[1], parts[2], ranks)
    return IntensityModel(partition, m, coeffs)


def select_ranks(tensor: np.ndarray, tau: float = 2.0) -> tuple[int, ...]:
    """Pick per-mode ranks from consecutive singular value ratios.

    For each mode, the rank is one past the largest index whose ratio
    ``sigma_k / sigma_{k+1}`` exceeds ``tau`` (capped at the number of
    nonzero singular values), falling back to rank one when no ratio is
    large.
    """
    if tau <= 0:
        raise ValueError("ratio threshold must be positive")
    tensor = np.asarray(tensor, dtype=float)
    ranks = []
    for mode in range(tensor.ndim):
        sig = np.linalg.svd(matricize(tensor, mode), compute_uv=False)
        top = sig[0] if sig.size else 0.0
        if top <= 0.0:
            ranks.append(1)
            continue
        nonzero = int((sig > 1e-12 * top).sum())
        lead, trail = sig[:-1], sig[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(trail > 0.0, lead / np.where(trail > 0.0, trail, 1.0), np.where(lead > 0.0, np.inf, 0.0))
        big = np.nonzero(ratios > tau)[0]
        rank = int(big[-1]) + 2 if big.size else 1
        ranks.append(max(1, min(rank, nonzero)))
    return tuple(ranks)


class GammaSelection(NamedTuple):
    gamma: float
    scores: np.ndarray


def _content_fold_labels(patterns: Sequence[PointPattern], folds: int, seed: int) -> np.ndarray:
    # Patterns are keyed by hashed content so the assignment is balanced,
    # deterministic in the seed, and invariant to the order of the list.
    keys = []
    for p in patterns:
        canon = p.points[np.lexsort(p.points.T)] if p.n else p.points
        h = hashlib.blake2b(digest_size=16)
        h.update(repr(int(seed)).encode())
        h.update(np.ascontiguousarray(canon).tobytes())
        keys.append(h.digest())
    order = sorted(range(len(patterns)), key=lambda i: keys[i])
    labels = np.empty(len(patterns), dtype=int)
    for pos, idx in enumerate(order):
        labels[idx] = pos % folds
    return labels


def cv_gamma(
    patterns: Sequence[PointPattern],
    partition: PartitionSpec,
    m: int,
    gammas: Sequence[float],
    folds: int = 5,
    seed: int = 0,
) -> GammaSelection:
    """Cross-validate the soft-SVT level over whole processes.

    Each fold's score is ``|T_g(b_train)|_F^2 - 2 <T_g(b_train), b_valid>``,
    an unbiased surrogate (up to a constant) for the squared coefficient
    error of the thresholded train tensor.  Ties prefer the smaller level.
    Fewer patterns than folds are handled by thinning every pattern into
    ``folds`` parts, which keeps each fold estimate unbiased.
    """
    _check_patterns(patterns, partition)
    if partition.s != 2:
        raise ValueError("the threshold level applies to two-block estimation only")
    gammas = np.asarray(list(gammas), dtype=float)
    if gammas.size == 0:
        raise ValueError("need at least one candidate level")
    if np.any(gammas < 0):
        raise ValueError("levels must be nonnegative")
    if folds < 2:
        raise ValueError("need at least two folds")
    n = len(patterns)
    if n >= folds:
        labels = _content_fold_labels(patterns, folds, seed)
        sums, counts = _group_sums(patterns, partition, m, labels, folds)
        valid = [sums[f] / counts[f] for f in range(folds)]
        train = [
            (sums.sum(axis=0) - sums[f]) / (n - counts[f]) for f in range(folds)
        ]
    else:
        rng = substream(seed, 9173)
        groups: list[list[PointPattern]] = [[] for _ in range(folds)]
        for p in patterns:
            for f, part in enumerate(thin_split(p, folds, rng)):
                groups[f].append(part)
        sums = np.stack([
            _basis_sum(np.concatenate([q.points for q in g], axis=0), partition, m)
            if sum(q.n for q in g)
            else np.zeros(partition.block_sizes(m))
            for g in groups
        ])
        valid = [folds * sums[f] / n for f in range(folds)]
        train = [
            folds * (sums.sum(axis=0) - sums[f]) / ((folds - 1) * n) for f in range(folds)
        ]
    scores = np.zeros(gammas.size)
    for f in range(folds):
        u, sig, vt = np.linalg.svd(train[f], full_matrices=False)
        cross = np.einsum("ik,ij,jk->k", u, valid[f], vt.T)
        for t, g in enumerate(gammas):
            kept = np.maximum(sig - g, 0.0)
            scores[t] += kept @ kept - 2.0 * kept @ cross
    best = min(range(gammas.size), key=lambda t: (scores[t], gammas[t]))
    return GammaSelection(float(gammas[best]), scores)


def theoretical_m(n: int, alpha: float = 2.0, d_max: int = 1, sobolev_norm: float = 1.0) -> int:
    """Basis size balancing squared bias against variance for smoothness
    ``alpha`` and largest block dimension ``d_max``."""
    if n < 1 or d_max < 1:
        raise ValueError("need n >= 1 and d_max >= 1")
    if alpha <= 0 or sobolev_norm <= 0:
        raise ValueError("smoothness and norm must be positive")
    return int(math.ceil((sobolev_norm**2 * n) ** (1.0 / (2.0 * alpha + d_max))))


def theoretical_gamma(
    n: int,
    alpha: float = 2.0,
    d_max: int = 1,
    sobolev_norm: float = 1.0,
    scale: float = 1.0,
) -> float:
    """Threshold level matching the noise operator norm rate, times ``scale``."""
    if n < 1 or d_max < 1:
        raise ValueError("need n >= 1 and d_max >= 1")
    if alpha <= 0 or sobolev_norm <= 0:
        raise ValueError("smoothness and norm must be positive")
    expo = 2.0 * alpha / (2.0 * alpha + d_max)
    norm_part = sobolev_norm ** (2.0 * d_max / (2.0 * alpha + d_max))
    return scale * math.sqrt(norm_part * math.log(n) / n**expo) if n > 1 else 0.0


def cluster_partition(
    patterns: Sequence[PointPattern], s: int
) -> tuple[np.ndarray, PartitionSpec]:
    """Group coordinates into ``s`` blocks by empirical correlation.

    Starting from singletons, greedily merge the two clusters with the
    highest mean absolute cross-correlation, subject to a balance cap of
    ``ceil(D / s)`` coordinates per block (relaxed minimally if no pair
    fits).  Returns the coordinate permutation that makes the blocks
    contiguous, along with the resulting partition.
    """
    if len(patterns) == 0:
        raise ValueError("need at least one pattern")
    dim = patterns[0].dim
    if not 1 <= s <= dim:
        raise ValueError(f"number of blocks must lie in [1, {dim}]")
    pooled = np.concatenate([p.points for p in patterns], axis=0)
    if pooled.shape[0] >= 2:
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.corrcoef(pooled.T)
        corr = np.abs(np.nan_to_num(corr, nan=0.0))
    else:
        corr = np.zeros((dim, dim))
    np.fill_diagonal(corr, 0.0)
    clusters: list[list[int]] = [[i] for i in range(dim)]
    cap = math.ceil(dim / s)
    while len(clusters) > s:
        pairs = []
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                size = len(clusters[a]) + len(clusters[b])
                score = float(
                    np.mean([corr[i, j] for i in clusters[a] for j in clusters[b]])
                )
                pairs.append((size, score, a, b))
        fitting = [p for p in pairs if p[0] <= cap]
        if not fitting:
            smallest = min(p[0] for p in pairs)
            fitting = [p for p in pairs if p[0] == smallest]
        size, score, a, b = max(fitting, key=lambda p: (p[1], -p[2], -p[3]))
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
    clusters.sort(key=min)
    perm = np.array([i for cl in clusters for i in cl], dtype=int)
    return perm, PartitionSpec(tuple(len(cl) for cl in clusters))


@dataclass
class EstimatorConfig:
    """Declarative description of one intensity fit.

    ``gamma`` may be a number (fixed level), a sequence (cross-validated
    grid), the string ``"theory"`` (rate-matched level), or ``None`` which
    defaults to ``"theory"``.  ``ranks=None`` selects ranks from the
    pooled coefficients with ratio threshold ``tau``.
    """

    partition: PartitionSpec
    m: int
    method: str = "matrix_svt"
    gamma: float | str | Sequence[float] | None = None
    ranks: tuple[int, ...] | None = None
    tau: float = 2.0
    sample_split: bool = False
    cv_folds: int = 5
    seed: int = 0
    clip_negative: bool = False
    alpha: float = 2.0
    sobolev_norm: float = 1.0
    gamma_scale: float = 1.0


def _resolve_gamma(config: EstimatorConfig, patterns: Sequence[PointPattern]) -> float:
    g = config.gamma if config.gamma is not None else "theory"
    if isinstance(g, str):
        if g != "theory":
            raise ValueError(f"unknown gamma mode {g!r}")
        return theoretical_gamma(
            len(patterns),
            config.alpha,
            max(config.partition.block_dims),
            config.sobolev_norm,
            config.gamma_scale,
        )
    if np.ndim(g) == 0:
        return float(g)
    return cv_gamma(
        patterns, config.partition, config.m, g, folds=config.cv_folds, seed=config.seed
    ).gamma


def fit_intensity(
    config: EstimatorConfig,
    patterns: Sequence[PointPattern],
    rng: np.random.Generator | None = None,
) -> IntensityModel:
    """Fit the configured estimator to the patterns."""
    method = config.method
    if method not in ("raw", "matrix_svt", "tensor"):
        raise ValueError(f"unknown method {config.method!r}")
    if method == "tensor" and config.partition.s == 2:
        warnings.warn(
            "two blocks: the sketched Tucker estimator reduces to soft "
            "singular value thresholding, using matrix_svt instead",
            stacklevel=2,
        )
        method = "matrix_svt"
    if method == "raw":
        model = IntensityModel(
            config.partition,
            config.m,
            empirical_coefficients(patterns, config.partition, config.m),
        )
    elif method == "matrix_svt":
        model = matrix_svt_estimate(
            patterns, config.partition, config.m, _resolve_gamma(config, patterns)
        )
    else:
        ranks = config.ranks
        if ranks is None:
            pooled = empirical_coefficients(patterns, config.partition, config.m)
            ranks = select_ranks(pooled, config.tau)
        model = tensor_estimate(
            patterns,
            config.partition,
            config.m,
            ranks,
            sample_split=config.sample_split,
            rng=rng if rng is not None else substream(config.seed, 7841),
        )
    model.clip_negative = config.clip_negative
    return model
