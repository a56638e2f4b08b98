"""Dense tensor algebra used by the low-rank intensity estimators.

Tensors are plain numpy arrays.  One flattening convention is used
throughout the package: whenever several indices collapse into one axis
(matricization columns, Kronecker factor products, block bases), the first
participating index varies fastest.
"""

from __future__ import annotations

from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

ORTHONORMALITY_TOL = 1e-8


class SvdFactors(NamedTuple):
    """Truncated SVD factors; ``U`` and ``V`` hold singular vectors as columns."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray


def _check_mode(tensor: np.ndarray, mode: int) -> None:
    if not 0 <= mode < tensor.ndim:
        raise ValueError(f"mode {mode} out of range for order-{tensor.ndim} tensor")


def matricize(tensor: np.ndarray, mode: int) -> np.ndarray:
    """Unfold ``tensor`` along ``mode`` into a matrix.

    Rows are indexed by ``mode``; columns enumerate the remaining axes in
    their original order with the first remaining axis varying fastest.
    """
    tensor = np.asarray(tensor)
    _check_mode(tensor, mode)
    moved = np.moveaxis(tensor, mode, 0)
    return moved.reshape(tensor.shape[mode], -1, order="F")


def unmatricize(mat: np.ndarray, dims: Sequence[int], mode: int) -> np.ndarray:
    """Inverse of :func:`matricize` for a tensor with shape ``dims``."""
    dims = tuple(int(d) for d in dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    rest = dims[:mode] + dims[mode + 1 :]
    if mat.shape != (dims[mode], int(np.prod(rest, dtype=np.int64))):
        raise ValueError(f"matrix shape {mat.shape} does not match dims {dims} at mode {mode}")
    moved = mat.reshape((dims[mode],) + rest, order="F")
    return np.moveaxis(moved, 0, mode)


def mode_product(tensor: np.ndarray, mat: np.ndarray, mode: int) -> np.ndarray:
    """Contract ``mat`` (shape ``q x p_mode``) against ``mode`` of ``tensor``."""
    tensor = np.asarray(tensor)
    _check_mode(tensor, mode)
    if mat.ndim != 2 or mat.shape[1] != tensor.shape[mode]:
        raise ValueError(
            f"matrix shape {mat.shape} incompatible with tensor axis of length "
            f"{tensor.shape[mode]}"
        )
    out = np.tensordot(mat, tensor, axes=(1, mode))
    return np.moveaxis(out, 0, mode)


def kron_factors(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of ``mats`` laid out to match :func:`matricize`.

    The first factor's indices vary fastest, so for column-orthonormal
    ``U_k`` one has ``matricize(T x_k U_k^T over k != j, j) ==
    matricize(T, j) @ kron_factors([U_k for k != j])``.
    """
    if len(mats) == 0:
        raise ValueError("kron_factors needs at least one matrix")
    return reduce(np.kron, reversed([np.asarray(m) for m in mats]))


def _fix_signs(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Make the largest-magnitude entry of each left singular vector positive
    # (ties resolve to the lowest row index), flipping V to preserve U S V^T.
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, v * signs


def truncated_svd(mat: np.ndarray, rank: int) -> SvdFactors:
    """Best rank-``rank`` SVD factors of a matrix.

    Singular values are returned in descending order.  Requires
    ``1 <= rank <= min(mat.shape)``.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise ValueError("truncated_svd expects a matrix")
    if not 1 <= rank <= min(mat.shape):
        raise ValueError(f"rank {rank} outside [1, {min(mat.shape)}] for shape {mat.shape}")
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    u, v = _fix_signs(u[:, :rank], vt[:rank].T)
    return SvdFactors(u, s[:rank], v)


def soft_threshold_svd(mat: np.ndarray, gamma: float) -> np.ndarray:
    """Apply soft thresholding at level ``gamma`` to the singular values."""
    if gamma < 0:
        raise ValueError("threshold level must be nonnegative")
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise ValueError("soft_threshold_svd expects a matrix")
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    return (u * np.maximum(s - gamma, 0.0)) @ vt


def _check_orthonormal(mat: np.ndarray) -> None:
    gram = mat.T @ mat
    if np.max(np.abs(gram - np.eye(mat.shape[1]))) > ORTHONORMALITY_TOL:
        raise ValueError("factor columns are not orthonormal")


def tucker_project(tensor: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    """Project every mode of ``tensor`` onto the span of the given factors.

    ``factors[j]`` must be column-orthonormal with ``tensor.shape[j]`` rows;
    the result has the same shape as ``tensor`` and mode-j Tucker rank at
    most ``factors[j].shape[1]``.
    """
    tensor = np.asarray(tensor, dtype=float)
    if len(factors) != tensor.ndim:
        raise ValueError(f"expected {tensor.ndim} factors, got {len(factors)}")
    out = tensor
    for mode, u in enumerate(factors):
        u = np.asarray(u, dtype=float)
        if u.ndim != 2 or u.shape[0] != tensor.shape[mode]:
            raise ValueError(f"factor {mode} has shape {u.shape}, expected ({tensor.shape[mode]}, r)")
        _check_orthonormal(u)
        out = mode_product(out, u @ u.T, mode)
    return out


def complete_orthonormal(u: np.ndarray, cols: int) -> np.ndarray:
    """Deterministically extend column-orthonormal ``u`` to ``cols`` columns."""
    rows, have = u.shape
    if cols < have:
        raise ValueError("cannot shrink a factor by completion")
    if cols > rows:
        raise ValueError(f"cannot extend to {cols} columns in {rows}-dimensional space")
    if cols == have:
        return u
    q, _ = np.linalg.qr(np.concatenate([u, np.eye(rows)], axis=1))
    extra = []
    for col in q.T:
        resid = col - u @ (u.T @ col)
        if extra:
            basis = np.stack(extra, axis=1)
            resid = resid - basis @ (basis.T @ resid)
        norm = np.linalg.norm(resid)
        if norm > 1e-8:
            extra.append(resid / norm)
        if have + len(extra) == cols:
            break
    return np.concatenate([u, np.stack(extra, axis=1)], axis=1)
