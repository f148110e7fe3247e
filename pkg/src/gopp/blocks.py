"""Stacks of square blocks: the container for orthogonal-transform tuples.

An ``nd x d`` matrix is interpreted as ``n`` stacked ``d x d`` blocks.  The
ground truth transforms, the power-method iterates and the spectral
initializer all live in this shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch

ORTHOGONALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BlockStack:
    """``n`` stacked ``d x d`` blocks stored as one ``(n*d, d)`` array.

    Parameters
    ----------
    n : int
        Number of blocks.
    d : int
        Block size.
    data : np.ndarray
        Array of shape ``(n*d, d)`` with finite entries.  It is copied and
        frozen so stacks can be shared across threads.
    orthogonal : bool
        When True, construction verifies that every block B satisfies
        ``||B.T @ B - I||_F <= 1e-10``.
    """

    n: int
    d: int
    data: np.ndarray
    orthogonal: bool = False

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape != (self.n * self.d, self.d):
            raise ShapeMismatch(
                f"expected ({self.n * self.d}, {self.d}) data, got {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("block stack entries must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.orthogonal:
            defect = self.orthogonality_defect()
            if defect > ORTHOGONALITY_TOL:
                raise ValueError(
                    f"stack flagged orthogonal but worst block defect is {defect:.3e}"
                )

    @classmethod
    def from_blocks(cls, blocks, orthogonal=False) -> "BlockStack":
        blocks = [np.asarray(b, dtype=np.float64) for b in blocks]
        d = blocks[0].shape[0]
        for b in blocks:
            if b.shape != (d, d):
                raise ShapeMismatch("all blocks must be square and equally sized")
        return cls(len(blocks), d, np.vstack(blocks), orthogonal=orthogonal)

    @classmethod
    def identity(cls, n: int, d: int) -> "BlockStack":
        return cls(n, d, np.tile(np.eye(d), (n, 1)), orthogonal=True)

    def block(self, i: int) -> np.ndarray:
        return self.data[i * self.d : (i + 1) * self.d, :]

    def blocks(self) -> np.ndarray:
        """View of the data as an (n, d, d) array of blocks."""
        return self.data.reshape(self.n, self.d, self.d)

    def orthogonality_defect(self) -> float:
        """max_i ||B_i.T @ B_i - I_d||_F over the stack."""
        b = self.blocks()
        g = np.einsum("nij,nik->njk", b, b) - np.eye(self.d)
        return float(np.sqrt((g**2).sum(axis=(1, 2))).max())

    def rotate(self, q: np.ndarray) -> "BlockStack":
        """Right-multiply every block by the same d x d matrix."""
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.d, self.d):
            raise ShapeMismatch(f"expected ({self.d}, {self.d}) rotation, got {q.shape}")
        return BlockStack(self.n, self.d, self.data @ q, orthogonal=self.orthogonal)

    def same_shape(self, other: "BlockStack") -> bool:
        return self.n == other.n and self.d == other.d
