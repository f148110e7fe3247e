"""Estimation-error measurements against the planted ground truth.

All block errors use a single global alignment rotation (not per-block
rotations): Q = polar(O.T S) minimizes the total Frobenius discrepancy and
the per-block errors are reported relative to that one Q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import BlockStack
from .errors import ShapeMismatch
from .linalg import align, df_distance, nuclear_norm, polar
from .solver import objective


@dataclass
class ErrorReport:
    df_to_truth: float
    blockwise_max: float
    blockwise_max_fro: float
    cloud_error: float
    objective: float


def blockwise_error(s: BlockStack, o: BlockStack) -> tuple[float, float]:
    """(max operator-norm, max Frobenius-norm) block error after global alignment."""
    if not s.same_shape(o):
        raise ShapeMismatch(f"stacks differ: ({s.n}, {s.d}) vs ({o.n}, {o.d})")
    q = align(s, o)
    diff = s.data - o.data @ q
    diff_blocks = diff.reshape(s.n, s.d, s.d)
    op = float(np.linalg.norm(diff_blocks, ord=2, axis=(1, 2)).max())
    fro = float(np.sqrt((diff_blocks**2).sum(axis=(1, 2))).max())
    return op, fro


def reconstruct_cloud(s: BlockStack, d_mat: np.ndarray) -> np.ndarray:
    """Consensus cloud (1/n) S.T D from an estimated stack."""
    d_mat = np.asarray(d_mat, dtype=np.float64)
    if d_mat.shape[0] != s.n * s.d:
        raise ShapeMismatch(
            f"data matrix has {d_mat.shape[0]} rows, stack expects {s.n * s.d}"
        )
    return (s.data.T @ d_mat) / s.n


def cloud_error(ahat: np.ndarray, a: np.ndarray) -> float:
    """min over orthogonal R of ||Ahat - R A||_F (Procrustes on the d x d Gram)."""
    ahat = np.asarray(ahat, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if ahat.shape != a.shape:
        raise ShapeMismatch(f"cloud shapes differ: {ahat.shape} vs {a.shape}")
    gram = ahat @ a.T
    scale_sq = (ahat**2).sum() + (a**2).sum()
    sq = scale_sq - 2.0 * nuclear_norm(gram)
    if sq <= 1e-8 * scale_sq:
        r = polar(gram)  # maximizes <Ahat, R A>
        return float(np.linalg.norm(ahat - r @ a))
    return float(np.sqrt(sq))


def error_report(s: BlockStack, instance) -> ErrorReport:
    """Assemble every error measure of an estimate against its instance."""
    op, fro = blockwise_error(s, instance.O)
    ahat = reconstruct_cloud(s, instance.D)
    return ErrorReport(
        df_to_truth=df_distance(s, instance.O),
        blockwise_max=op,
        blockwise_max_fro=fro,
        cloud_error=cloud_error(ahat, instance.A),
        objective=objective(instance.C, s),
    )
