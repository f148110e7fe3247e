import numpy as np
import pytest

from gopp.blocks import BlockStack


def haar_orthogonal(rng, d):
    z = rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * np.where(np.diagonal(r) < 0, -1.0, 1.0)


def random_orthogonal_stack(rng, n, d):
    return BlockStack.from_blocks(
        [haar_orthogonal(rng, d) for _ in range(n)], orthogonal=True
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
