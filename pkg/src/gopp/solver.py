"""Spectral initialization and the generalized power method.

The iteration lifts the data Gram matrix once per step and re-projects each
block onto the orthogonal group:

    S <- blockwise_polar(C @ S)

Starting from the blockwise polar projection of the top-d left singular
subspace of the stacked data matrix, the iterates ascend the quadratic
objective f(S) = <C, S S.T> = ||D.T S||_F^2 monotonically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockStack
from .errors import ShapeMismatch
from .linalg import df_distance, polar_blockwise, top_left_singular_vectors

DEFAULT_MAX_ITERS = 1000
DEFAULT_STOP_TOL = 1e-10


@dataclass(frozen=True)
class SolveOptions:
    """Loop controls.

    stop_tol applies to the normalized step residual
    d_F(S_next, S) / sqrt(n*d); trace retains every iterate in the report.
    """

    max_iters: int = DEFAULT_MAX_ITERS
    stop_tol: float = DEFAULT_STOP_TOL
    trace: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_tol <= 0:
            raise ValueError("stop_tol must be positive")


@dataclass
class SolveReport:
    S_final: BlockStack
    iters: int
    step_residuals: list[float]
    objectives: list[float]
    converged: bool
    degenerate_blocks: list[tuple[int, int]] = field(default_factory=list)
    iterates: list[BlockStack] | None = None


def spectral_init(d_mat: np.ndarray, n: int, d: int) -> BlockStack:
    """Blockwise polar projection of the top-d left singular subspace of D."""
    d_mat = np.asarray(d_mat, dtype=np.float64)
    if d_mat.shape[0] != n * d:
        raise ShapeMismatch(
            f"data matrix has {d_mat.shape[0]} rows, expected n*d={n * d}"
        )
    u = top_left_singular_vectors(d_mat, d)
    return polar_blockwise(u)


def gpm_step(c_mat: np.ndarray, s: BlockStack) -> BlockStack:
    """One power step: blockwise polar projection of C @ S."""
    _check_shapes(c_mat, s)
    lifted = BlockStack(s.n, s.d, c_mat @ s.data)
    return polar_blockwise(lifted)


def objective(c_mat: np.ndarray, s: BlockStack) -> float:
    """f(S) = <C, S S.T> = Tr(S.T C S)."""
    _check_shapes(c_mat, s)
    return float(np.sum((c_mat @ s.data) * s.data))


def _check_shapes(c_mat, s):
    nd = s.n * s.d
    if c_mat.shape != (nd, nd):
        raise ShapeMismatch(
            f"Gram matrix is {c_mat.shape}, stack expects ({nd}, {nd})"
        )


def solve(
    c_mat: np.ndarray,
    n: int,
    d: int,
    s0: BlockStack,
    opts: SolveOptions | None = None,
) -> SolveReport:
    """Iterate the power method from s0 until the step residual drops below
    stop_tol or max_iters is hit.

    Degenerate lifted blocks (smallest singular value below 1e-12) keep the
    deterministic polar choice and are recorded as (iteration, block) pairs;
    hitting max_iters leaves converged=False in the report rather than
    raising.
    """
    if opts is None:
        opts = SolveOptions()
    if (s0.n, s0.d) != (n, d):
        raise ShapeMismatch(f"s0 is ({s0.n}, {s0.d}) blocks, expected ({n}, {d})")
    _check_shapes(c_mat, s0)
    c_mat = np.asarray(c_mat, dtype=np.float64)

    sqrt_nd = np.sqrt(n * d)
    s = s0
    residuals: list[float] = []
    objectives: list[float] = []
    degenerate: list[tuple[int, int]] = []
    iterates: list[BlockStack] | None = [s0] if opts.trace else None
    converged = False
    iters = 0

    for t in range(opts.max_iters):
        lifted = c_mat @ s.data
        objectives.append(float(np.sum(lifted * s.data)))
        s_next, flags = polar_blockwise(
            BlockStack(n, d, lifted), return_degenerate=True
        )
        if flags.any():
            degenerate.extend((t, int(i)) for i in np.nonzero(flags)[0])
        residual = df_distance(s_next, s) / sqrt_nd
        residuals.append(residual)
        s = s_next
        iters = t + 1
        if iterates is not None:
            iterates.append(s)
        if residual <= opts.stop_tol:
            converged = True
            break

    objectives.append(objective(c_mat, s))
    return SolveReport(
        S_final=s,
        iters=iters,
        step_residuals=residuals,
        objectives=objectives,
        converged=converged,
        degenerate_blocks=degenerate,
        iterates=iterates,
    )
