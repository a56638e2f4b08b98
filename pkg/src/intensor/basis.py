"""Shifted Legendre bases on the unit cube and block tensor-product models.

Coordinates are grouped into contiguous blocks by a :class:`PartitionSpec`;
each block carries the tensor product of per-coordinate orthonormal
polynomials, flattened with the first coordinate varying fastest (the same
convention as :mod:`intensor.tensors`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from intensor.errors import ResourceLimitError

QUADRATURE_POINT_BUDGET = 100_000_000


def legendre_eval(m: int, x) -> np.ndarray:
    """Evaluate the first ``m`` orthonormal shifted Legendre polynomials.

    Parameters
    ----------
    m : int
        Number of basis functions; member ``k`` (0-based) has degree ``k``.
    x : float or ndarray
        Points in ``[0, 1]``.

    Returns
    -------
    ndarray
        Shape ``x.shape + (m,)``; entry ``k`` is ``sqrt(2k+1) P_k(2x-1)``,
        so the functions are orthonormal in ``L2([0, 1])`` and bounded by
        ``sqrt(2k+1)``.
    """
    if m < 1:
        raise ValueError("basis size must be at least 1")
    x = np.asarray(x, dtype=float)
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("basis arguments must lie in [0, 1]")
    t = 2.0 * x - 1.0
    out = np.empty(x.shape + (m,))
    out[..., 0] = 1.0
    if m > 1:
        out[..., 1] = t
    for k in range(2, m):
        # three-term recurrence for P_k, stable on [-1, 1]
        out[..., k] = ((2 * k - 1) * t * out[..., k - 1] - (k - 1) * out[..., k - 2]) / k
    out *= np.sqrt(2.0 * np.arange(m) + 1.0)
    return out


def gauss_legendre_01(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights transplanted to ``[0, 1]``."""
    if k < 1:
        raise ValueError("need at least one quadrature node")
    nodes, weights = np.polynomial.legendre.leggauss(k)
    return (nodes + 1.0) / 2.0, weights / 2.0


@dataclass(frozen=True)
class PartitionSpec:
    """Contiguous grouping of coordinates into blocks.

    ``block_dims[j]`` is the number of coordinates in block ``j``.  Any
    coordinate permutation is applied upstream by the partitioner; this
    type only records block sizes.
    """

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if len(dims) == 0 or any(d < 1 for d in dims):
            raise ValueError(f"block dims must be positive, got {self.block_dims}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def dim(self) -> int:
        return sum(self.block_dims)

    @property
    def s(self) -> int:
        return len(self.block_dims)

    def block_slices(self) -> list[slice]:
        edges = np.concatenate([[0], np.cumsum(self.block_dims)])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def block_sizes(self, m: int) -> tuple[int, ...]:
        return tuple(m**d for d in self.block_dims)


def block_basis_matrices(
    partition: PartitionSpec, m: int, points: np.ndarray
) -> list[np.ndarray]:
    """Per-block basis evaluations for a batch of points.

    Parameters
    ----------
    points : ndarray, shape (N, D)

    Returns
    -------
    list of ndarray
        Matrix ``j`` has shape ``(N, m**d_j)``; its columns enumerate the
        block's coordinate multi-index with the first coordinate fastest.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != partition.dim:
        raise ValueError(f"points must be (N, {partition.dim}), got {points.shape}")
    per_coord = legendre_eval(m, points)  # (N, D, m)
    mats = []
    for sl in partition.block_slices():
        block = per_coord[:, sl.start, :]
        for c in range(sl.start + 1, sl.stop):
            nxt = per_coord[:, c, :]
            block = (nxt[:, :, None] * block[:, None, :]).reshape(points.shape[0], -1)
        mats.append(block)
    return mats


def block_basis_eval(partition: PartitionSpec, m: int, x: np.ndarray) -> list[np.ndarray]:
    """Per-block basis vectors at a single point ``x`` of length ``D``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (partition.dim,):
        raise ValueError(f"point must have length {partition.dim}, got shape {x.shape}")
    return [mat[0] for mat in block_basis_matrices(partition, m, x[None, :])]


@dataclass
class IntensityModel:
    """Intensity estimate in a block tensor-product basis.

    ``coefficients`` is an order-``s`` tensor with mode ``j`` of size
    ``m**d_j``.  Evaluation contracts it against the block basis vectors;
    ``clip_negative`` clamps evaluations at zero (off by default, and
    benchmark errors are reported unclipped).
    """

    partition: PartitionSpec
    m: int
    coefficients: np.ndarray
    clip_negative: bool = False

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        want = self.partition.block_sizes(self.m)
        if self.coefficients.shape != want:
            raise ValueError(
                f"coefficients shape {self.coefficients.shape} does not match "
                f"blocks {want}"
            )

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return evaluate_model(self, points)


def evaluate_model(model: IntensityModel, points: np.ndarray) -> np.ndarray:
    """Evaluate ``model`` at one point ``(D,)`` or a batch ``(N, D)``."""
    points = np.asarray(points, dtype=float)
    single = points.ndim == 1
    if single:
        points = points[None, :]
    mats = block_basis_matrices(model.partition, model.m, points)
    n = points.shape[0]
    res = np.tensordot(mats[0], model.coefficients, axes=(1, 0))
    for mat in mats[1:]:
        flat = res.reshape(n, mat.shape[1], -1)
        res = np.einsum("pa,par->pr", mat, flat)
    res = res.reshape(n)
    if model.clip_negative:
        res = np.maximum(res, 0.0)
    return res[0] if single else res


def project_function(
    f: Callable[[np.ndarray], np.ndarray],
    partition: PartitionSpec,
    m: int,
    quad_nodes: int | None = None,
) -> IntensityModel:
    """L2 projection of ``f`` onto the block basis via tensor quadrature.

    Parameters
    ----------
    f : callable
        Vectorized map from ``(N, D)`` points to ``(N,)`` values.
    quad_nodes : int, optional
        Gauss-Legendre nodes per coordinate; defaults to ``2 m``, which
        integrates products of ``f`` and the basis exactly whenever ``f``
        is a polynomial of per-coordinate degree at most ``3 m``.
    """
    dim = partition.dim
    q = 2 * m if quad_nodes is None else int(quad_nodes)
    if q < 1:
        raise ValueError("need at least one quadrature node per coordinate")
    if q**dim > QUADRATURE_POINT_BUDGET:
        raise ResourceLimitError(
            f"quadrature grid of {q}^{dim} points exceeds the "
            f"{QUADRATURE_POINT_BUDGET:.0e}-point budget"
        )
    nodes, weights = gauss_legendre_01(q)
    axes = np.meshgrid(*([nodes] * dim), indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=-1)
    vals = np.asarray(f(pts), dtype=float).reshape((q,) * dim)
    weighted_basis = legendre_eval(m, nodes) * weights[:, None]  # (q, m)
    for _ in range(dim):
        # consume the leading remaining coordinate axis, append its basis axis
        vals = np.tensordot(vals, weighted_basis, axes=([0], [0]))
    # group per-coordinate axes into block axes, first coordinate fastest
    perm: list[int] = []
    for sl in partition.block_slices():
        perm.extend(reversed(range(sl.start, sl.stop)))
    coeffs = np.transpose(vals, perm).reshape(partition.block_sizes(m))
    return IntensityModel(partition, m, coeffs)
