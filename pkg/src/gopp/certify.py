"""Dual certificate of global optimality for the semidefinite relaxation.

A candidate orthogonal stack S solves the relaxation

    max <C, G>  s.t.  G >= 0, G_ii = I_d

through G = S S.T exactly when a block-diagonal multiplier Lambda exists
with C S = Lambda S and Lambda - C positive semidefinite; a spectral gap of
rank (n-1)d additionally makes the optimum unique.  At a power-method fixed
point the natural multiplier blocks are the symmetric PSD square roots of
[C S]_i [C S]_i.T, so the certificate can be assembled and checked directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockStack
from .linalg import smallest_eigenvalues, symmetric_psd_sqrt
from .solver import _check_shapes

VERDICT_CERTIFIED_UNIQUE = "CertifiedUnique"
VERDICT_CERTIFIED = "Certified"
VERDICT_UNCERTIFIED = "Uncertified"


@dataclass(frozen=True)
class CertTolerances:
    """Floating-point slack for the exact optimality conditions.

    stationarity: relative residual ||C S - Lambda S||_F / ||C S||_F.
    psd: lower slack on the smallest eigenvalue of Lambda - C, relative to
    an operator-norm estimate of C.  gap: required size of the (d+1)-th
    smallest eigenvalue, same normalization.
    """

    stationarity: float = 1e-8
    psd: float = 1e-9
    gap: float = 1e-8


@dataclass
class Certificate:
    lambda_blocks: list[np.ndarray]
    stationarity_residual: float
    min_eig: float
    gap_eig: float
    opnorm_c: float
    verdict: str
    tolerances: CertTolerances = field(default_factory=CertTolerances)

    @property
    def certified(self) -> bool:
        return self.verdict in (VERDICT_CERTIFIED_UNIQUE, VERDICT_CERTIFIED)


def _psd_opnorm_estimate(c_mat: np.ndarray, iters: int = 60) -> float:
    """Largest eigenvalue of a PSD matrix by deterministic power iteration.

    Only used to scale tolerances, so moderate accuracy suffices.  The start
    vector is a fixed-seed Gaussian draw (structured starts can be exactly
    orthogonal to the top eigenvector); the largest diagonal entry is a PSD
    lower bound and floors the estimate.
    """
    n = c_mat.shape[0]
    diag_floor = float(np.max(np.diagonal(c_mat), initial=0.0))
    rng = np.random.Generator(np.random.Philox(0x0B5E55ED))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = c_mat @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        new_est = float(v @ (c_mat @ v))
        if abs(new_est - est) <= 1e-9 * max(new_est, 1e-300):
            est = new_est
            break
        est = new_est
    return max(est, diag_floor)


def build_certificate(c_mat: np.ndarray, s: BlockStack) -> list[np.ndarray]:
    """Multiplier blocks Lambda_ii = ([C S]_i [C S]_i.T)^{1/2}.

    Computed by eigendecomposition with negative eigenvalues clamped to
    zero, so every block is symmetric PSD by construction.
    """
    _check_shapes(c_mat, s)
    lifted = c_mat @ s.data
    d = s.d
    blocks = []
    for i in range(s.n):
        y = lifted[i * d : (i + 1) * d, :]
        blocks.append(symmetric_psd_sqrt(y @ y.T))
    return blocks


def check_global_optimality(
    c_mat: np.ndarray,
    s: BlockStack,
    tols: CertTolerances | None = None,
) -> Certificate:
    """Assemble the block-diagonal multiplier at S and test the optimality
    conditions.

    Verdict is CertifiedUnique when the stationarity residual, the smallest
    eigenvalue of Lambda - C and the (d+1)-th smallest all pass; Certified
    when only the uniqueness gap fails; Uncertified otherwise.
    """
    if tols is None:
        tols = CertTolerances()
    _check_shapes(c_mat, s)
    c_mat = np.asarray(c_mat, dtype=np.float64)
    n, d = s.n, s.d
    blocks = build_certificate(c_mat, s)

    lifted = c_mat @ s.data
    lam_s = np.vstack([blocks[i] @ s.block(i) for i in range(n)])
    denom = np.linalg.norm(lifted)
    stationarity = float(np.linalg.norm(lifted - lam_s) / max(denom, 1e-300))

    gap_mat = -c_mat
    for i in range(n):
        gap_mat[i * d : (i + 1) * d, i * d : (i + 1) * d] += blocks[i]
    eigs = smallest_eigenvalues(gap_mat, d + 1)
    min_eig = float(eigs[0])
    gap_eig = float(eigs[d])

    # C is PSD, so its operator norm is its largest eigenvalue.
    opnorm_c = _psd_opnorm_estimate(c_mat)
    scale = max(opnorm_c, 1e-300)

    stationary = stationarity <= tols.stationarity
    psd_ok = min_eig >= -tols.psd * scale
    gap_ok = gap_eig >= tols.gap * scale
    if stationary and psd_ok and gap_ok:
        verdict = VERDICT_CERTIFIED_UNIQUE
    elif stationary and psd_ok:
        verdict = VERDICT_CERTIFIED
    else:
        verdict = VERDICT_UNCERTIFIED
    return Certificate(
        lambda_blocks=blocks,
        stationarity_residual=stationarity,
        min_eig=min_eig,
        gap_eig=gap_eig,
        opnorm_c=opnorm_c,
        verdict=verdict,
        tolerances=tols,
    )
