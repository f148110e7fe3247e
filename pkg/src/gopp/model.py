"""Synthetic instance construction for the signal-plus-noise model.

Each of n observed point clouds is an orthogonally transformed copy of a
common d x m cloud plus i.i.d. Gaussian noise:

    D_i = O_i @ A + sigma * W_i,   i = 1..n

stacked into D (nd x m) with Gram matrix C = D @ D.T.

Reproducibility: all sampling uses the counter-based Philox generator with
SeedSequence substreams derived from the instance seed.  Substream 0 draws
the cloud A, substream 1 the orthogonal stack O, substream 2 the noise W,
so each piece is a pure function of (its parameters, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import BlockStack
from .errors import InvalidSpec

PLANTED_MODES = ("identity", "random-orthogonal")

_SIGNAL_STREAM = 0
_ROTATION_STREAM = 1
_NOISE_STREAM = 2


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(key,))))


def _haar(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-uniform orthonormal columns: QR of a Gaussian with the R diagonal
    forced positive."""
    z = rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(z)
    return q * np.where(np.diagonal(r) < 0.0, -1.0, 1.0)


@dataclass(frozen=True)
class SignalSpec:
    """Recipe for a synthetic instance.

    n clouds, m points per cloud, ambient dimension d, condition number
    kappa of the ground-truth cloud (smallest singular value pinned to 1),
    RNG seed, and the planted-transform mode.
    """

    n: int
    m: int
    d: int
    kappa: float = 1.0
    seed: int = 0
    planted: str = "identity"

    def __post_init__(self):
        if not (self.m >= self.d >= 1):
            raise InvalidSpec(f"need m >= d >= 1, got m={self.m}, d={self.d}")
        if self.n < 2:
            raise InvalidSpec(f"need n >= 2, got n={self.n}")
        if self.kappa < 1.0:
            raise InvalidSpec(f"need kappa >= 1, got {self.kappa}")
        if self.planted not in PLANTED_MODES:
            raise InvalidSpec(f"planted must be one of {PLANTED_MODES}")


@dataclass(frozen=True, eq=False)
class Instance:
    """A realized synthetic instance; immutable after construction."""

    spec: SignalSpec
    A: np.ndarray  # d x m ground-truth cloud, singular values 1..kappa
    O: BlockStack  # ground-truth orthogonal transforms
    sigma: float
    W: np.ndarray  # nd x m standard-normal draw
    D: np.ndarray  # nd x m stacked data
    C: np.ndarray  # nd x nd Gram matrix, exactly symmetric

    def __post_init__(self):
        for name in ("A", "W", "D", "C"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def seed(self) -> int:
        return self.spec.seed


def make_signal(spec: SignalSpec) -> np.ndarray:
    """Draw the ground-truth cloud A = U0 @ diag(s) @ V0.T.

    U0 (d x d) and V0 (m x d) are Haar-uniform; the singular values are
    linearly spaced from 1 to kappa, so sigma_min(A) = 1 exactly and
    kappa = 1 gives A @ A.T = I_d.
    """
    rng = _stream(spec.seed, _SIGNAL_STREAM)
    u0 = _haar(rng, spec.d, spec.d)
    v0 = _haar(rng, spec.m, spec.d)
    if spec.d == 1:
        svals = np.array([1.0])
    else:
        svals = np.linspace(1.0, float(spec.kappa), spec.d)
    return (u0 * svals) @ v0.T


def sample_orthogonal_stack(n: int, d: int, seed: int, planted: str) -> BlockStack:
    """The planted transforms: all-identity or i.i.d. Haar-orthogonal blocks."""
    if planted not in PLANTED_MODES:
        raise InvalidSpec(f"planted must be one of {PLANTED_MODES}")
    if planted == "identity":
        return BlockStack.identity(n, d)
    rng = _stream(seed, _ROTATION_STREAM)
    return BlockStack.from_blocks(
        [_haar(rng, d, d) for _ in range(n)], orthogonal=True
    )


def sigma_from_eta(eta: float, n: int, m: int, d: int) -> float:
    """Noise level from the rescaled parameter: sigma = eta*sqrt(n)/(sqrt(nd)+sqrt(m))."""
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    return eta * np.sqrt(n) / (np.sqrt(n * d) + np.sqrt(m))


def eta_from_sigma(sigma: float, n: int, m: int, d: int) -> float:
    """Inverse of sigma_from_eta."""
    return sigma * (np.sqrt(n * d) + np.sqrt(m)) / np.sqrt(n)


def gram_matrix(d_mat: np.ndarray) -> np.ndarray:
    """D @ D.T made exactly symmetric (upper triangle computed, mirrored)."""
    raw = d_mat @ d_mat.T
    upper = np.triu(raw)
    return upper + np.triu(raw, 1).T


def generate(spec: SignalSpec, sigma: float) -> Instance:
    """Realize an instance: draw A, O, W and assemble D and C.

    The result is a pure function of (spec, sigma): repeated calls return
    bitwise-identical arrays.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    a = make_signal(spec)
    o = sample_orthogonal_stack(spec.n, spec.d, spec.seed, spec.planted)
    rng = _stream(spec.seed, _NOISE_STREAM)
    w = rng.standard_normal((spec.n * spec.d, spec.m))
    d_mat = o.blocks() @ a
    d_mat = d_mat.reshape(spec.n * spec.d, spec.m) + sigma * w
    return Instance(
        spec=spec, A=a, O=o, sigma=float(sigma), W=w, D=d_mat,
        C=gram_matrix(d_mat),
    )
