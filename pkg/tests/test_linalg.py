import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gopp.blocks import BlockStack
from gopp.errors import NoSpectralGap, NotSymmetric, ShapeMismatch
from gopp.linalg import (
    align,
    df_distance,
    nuclear_norm,
    polar,
    polar_blockwise,
    smallest_eigenvalues,
    symmetric_psd_sqrt,
    top_left_singular_vectors,
)
from tests.conftest import haar_orthogonal, random_orthogonal_stack


def principal_angle_defect(u, v):
    """sin of the largest principal angle between orthonormal column spans."""
    return float(np.linalg.norm(u - v @ (v.T @ u), ord=2))


# ---------------------------------------------------------------------------
# polar
# ---------------------------------------------------------------------------


def test_polar_identity():
    assert np.allclose(polar(np.eye(2)), np.eye(2), atol=1e-14)


def test_polar_rotation_times_stretch():
    x = np.array([[0.0, -1.0], [3.0, 0.0]])
    expected = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(polar(x), expected, atol=1e-12)


def test_polar_diagonal_signs():
    assert np.allclose(polar(np.diag([2.0, -3.0])), np.diag([1.0, -1.0]), atol=1e-12)


def test_polar_degenerate_flag():
    q, degenerate = polar(np.zeros((2, 2)), return_degenerate=True)
    assert degenerate
    assert np.allclose(q.T @ q, np.eye(2), atol=1e-12)
    _, ok = polar(np.eye(2), return_degenerate=True)
    assert not ok


def test_polar_rejects_nonsquare():
    with pytest.raises(ShapeMismatch):
        polar(np.ones((2, 3)))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_polar_orthogonality_invariant(d, seed):
    rng = np.random.default_rng(seed)
    q = polar(rng.standard_normal((d, d)))
    assert np.linalg.norm(q.T @ q - np.eye(d)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_polar_optimality_invariant(d, seed):
    # polar(X) beats 100 random orthogonal candidates in Frobenius distance
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((d, d)) + 3.0 * np.eye(d)  # keep it invertible-ish
    if abs(np.linalg.det(x)) < 1e-6:
        return
    best = np.linalg.norm(x - polar(x))
    for _ in range(100):
        q = haar_orthogonal(rng, d)
        assert best <= np.linalg.norm(x - q) + 1e-9


@settings(max_examples=150, deadline=None)
@given(
    st.integers(1, 4),
    st.floats(1e-6, 1e6),
    st.integers(0, 2**32 - 1),
)
def test_polar_scale_invariance(d, c, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((d, d))
    assert np.allclose(polar(c * x), polar(x), atol=1e-12)


def test_polar_blockwise_identity_stack():
    stack = BlockStack.identity(4, 3)
    out = polar_blockwise(stack)
    assert np.allclose(out.data, stack.data, atol=1e-12)


def test_polar_blockwise_d1_signs():
    stack = BlockStack(2, 1, np.array([[5.0], [-2.0]]))
    out = polar_blockwise(stack)
    assert np.allclose(out.data, [[1.0], [-1.0]])


def test_polar_blockwise_positive_scaling(rng):
    qs = [haar_orthogonal(rng, 2) for _ in range(3)]
    scales = [0.5, 2.0, 7.0]
    stack = BlockStack.from_blocks([c * q for c, q in zip(scales, qs)])
    out = polar_blockwise(stack)
    for i, q in enumerate(qs):
        assert np.allclose(out.block(i), q, atol=1e-12)


def test_polar_blockwise_matches_per_block(rng):
    for _ in range(100):
        n, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        stack = BlockStack(n, d, rng.standard_normal((n * d, d)))
        out, flags = polar_blockwise(stack, return_degenerate=True)
        assert not flags.any()
        for i in range(n):
            assert np.allclose(out.block(i), polar(stack.block(i)), atol=1e-13)


def test_polar_blockwise_degenerate_flags():
    blocks = [np.eye(2), np.zeros((2, 2)), 2 * np.eye(2)]
    stack = BlockStack.from_blocks(blocks)
    out, flags = polar_blockwise(stack, return_degenerate=True)
    assert list(flags) == [False, True, False]
    assert out.orthogonality_defect() <= 1e-10


# ---------------------------------------------------------------------------
# nuclear norm
# ---------------------------------------------------------------------------


def test_nuclear_norm_identity():
    assert nuclear_norm(np.eye(3)) == pytest.approx(3.0, abs=1e-12)


def test_nuclear_norm_diagonal():
    assert nuclear_norm(np.diag([2.0, -5.0])) == pytest.approx(7.0, abs=1e-12)


def test_nuclear_norm_rank_one():
    # all-ones 2x2 is rank one; its only singular value is sqrt(sum x_ij^2) = 2
    x = np.ones((2, 2))
    sv = np.linalg.svd(x, compute_uv=False)
    assert sv[1] == pytest.approx(0.0, abs=1e-12)
    assert sv[0] == pytest.approx(np.sqrt((x**2).sum()), abs=1e-12)
    assert nuclear_norm(x) == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_nuclear_norm_invariants(rows, cols, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((rows, cols))
    nn = nuclear_norm(x)
    assert nn >= np.linalg.norm(x, ord=2) - 1e-12
    assert nn == pytest.approx(nuclear_norm(x.T), abs=1e-10)


# ---------------------------------------------------------------------------
# df_distance / align
# ---------------------------------------------------------------------------


def test_df_self_distance_zero(rng):
    x = random_orthogonal_stack(rng, 4, 2)
    assert df_distance(x, x) == pytest.approx(0.0, abs=1e-9)


def test_df_single_block_rotation_absorbed():
    theta = 0.7
    rot = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    x = BlockStack(1, 2, np.eye(2), orthogonal=True)
    y = BlockStack(1, 2, rot, orthogonal=True)
    assert df_distance(x, y) == pytest.approx(0.0, abs=1e-9)


def test_df_sign_stacks_frozen_value():
    # d=1, n=2: enumerate Q in {+1, -1}; both give distance 2
    x = BlockStack(2, 1, np.array([[1.0], [1.0]]), orthogonal=True)
    y = BlockStack(2, 1, np.array([[1.0], [-1.0]]), orthogonal=True)
    brute = min(
        np.linalg.norm(x.data - y.data * q) for q in (1.0, -1.0)
    )
    assert brute == pytest.approx(2.0, abs=1e-15)
    assert df_distance(x, y) == pytest.approx(2.0, abs=1e-9)


def test_df_shape_mismatch():
    x = BlockStack.identity(2, 2)
    y = BlockStack.identity(3, 2)
    with pytest.raises(ShapeMismatch):
        df_distance(x, y)


def test_align_identity_and_fixed_rotation(rng):
    y = random_orthogonal_stack(rng, 3, 2)
    assert np.allclose(align(y, y), np.eye(2), atol=1e-10)
    r = haar_orthogonal(rng, 2)
    x = y.rotate(r)
    assert np.allclose(align(x, y), r, atol=1e-10)


def test_align_matches_grid_search_oracle(rng):
    # brute-force O(2): rotations on a 1e-4 grid plus reflections
    x = random_orthogonal_stack(rng, 3, 2)
    y = random_orthogonal_stack(rng, 3, 2)
    thetas = np.arange(0.0, 2 * np.pi, 1e-4)
    c, s = np.cos(thetas), np.sin(thetas)
    rots = np.empty((len(thetas), 2, 2))
    rots[:, 0, 0] = c
    rots[:, 0, 1] = -s
    rots[:, 1, 0] = s
    rots[:, 1, 1] = c
    flip = np.array([[1.0, 0.0], [0.0, -1.0]])
    best = (np.inf, None)
    for refl in (False, True):
        qs = rots @ flip if refl else rots
        diffs = x.data[None, :, :] - y.data[None, :, :] @ qs
        costs = np.sqrt((diffs**2).sum(axis=(1, 2)))
        i = int(np.argmin(costs))
        if costs[i] < best[0]:
            best = (costs[i], qs[i])
    q = align(x, y)
    assert np.linalg.norm(x.data - y.data @ q) <= best[0] + 1e-7
    assert np.linalg.norm(q - best[1]) <= 2e-4


def test_df_closed_vs_direct_near_zero(rng):
    # the regime where the nuclear-norm form cancels; agreement must survive
    for _ in range(100):
        n, d = int(rng.integers(2, 7)), int(rng.integers(1, 4))
        x = random_orthogonal_stack(rng, n, d)
        q = haar_orthogonal(rng, d)
        perturbed = BlockStack(n, d, x.data @ q + 1e-9 * rng.standard_normal(x.data.shape))
        got = df_distance(perturbed, x)
        direct = np.linalg.norm(perturbed.data - x.data @ align(perturbed, x))
        assert abs(got - direct) <= 1e-9
        assert got <= 1e-7


@settings(max_examples=120, deadline=None)
@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_df_properties(n, d, seed):
    rng = np.random.default_rng(seed)
    x = random_orthogonal_stack(rng, n, d)
    y = random_orthogonal_stack(rng, n, d)
    direct = np.linalg.norm(x.data - y.data @ align(x, y))
    assert abs(df_distance(x, y) - direct) <= 1e-9
    assert abs(df_distance(x, y) - df_distance(y, x)) <= 1e-9
    q = haar_orthogonal(rng, d)
    assert abs(df_distance(x.rotate(q), y) - df_distance(x, y)) <= 1e-9


# ---------------------------------------------------------------------------
# top_left_singular_vectors
# ---------------------------------------------------------------------------


def test_top_subspace_noiseless_isotropic(rng):
    # D = Z (stacked identities): top-2 left subspace is span(Z)
    n, d = 4, 2
    z = np.tile(np.eye(d), (n, 1))
    u = top_left_singular_vectors(z, d)
    assert principal_angle_defect(u.data, z / np.sqrt(n)) <= 1e-10
    blocks = [u.block(i) for i in range(n)]
    for b in blocks[1:]:
        assert np.allclose(b, blocks[0], atol=1e-10)
    q0 = polar(np.sqrt(n) * blocks[0])
    assert np.allclose(q0.T @ q0, np.eye(d), atol=1e-10)


def test_top_subspace_noiseless_general_cloud(rng):
    # D = Z A: subspace equals span(Z U0) where A = U0 S0 V0t
    n, d, m = 3, 2, 6
    a = rng.standard_normal((d, m))
    z = np.tile(np.eye(d), (n, 1))
    u = top_left_singular_vectors(z @ a, d)
    u0 = np.linalg.svd(a)[0]
    target, _ = np.linalg.qr(z @ u0)
    assert principal_angle_defect(u.data, target) <= 1e-8


def test_top_subspace_matches_full_svd_oracle(rng):
    x = rng.standard_normal((6, 4))
    u = top_left_singular_vectors(x, 2)
    oracle = np.linalg.svd(x)[0][:, :2]
    assert principal_angle_defect(u.data, oracle) <= 1e-8


def test_top_subspace_residual_postcondition(rng):
    x = rng.standard_normal((20, 8))
    for d in (1, 2, 4):
        u = top_left_singular_vectors(x, d).data
        g = x @ x.T
        resid = np.linalg.norm(g @ u - u @ (u.T @ g @ u))
        assert resid <= 1e-8 * np.linalg.norm(x, 2) ** 2


def test_subspace_iteration_path_vs_full_oracle(rng):
    for trial in range(34):
        x = rng.standard_normal((20, 8))
        for d in (1, 2, 4):
            u_sub = top_left_singular_vectors(x, d, method="subspace")
            oracle = np.linalg.svd(x)[0][:, :d]
            assert principal_angle_defect(u_sub.data, oracle) <= 1e-8


def test_no_spectral_gap_raises():
    with pytest.raises(NoSpectralGap):
        top_left_singular_vectors(np.eye(4), 2)


# ---------------------------------------------------------------------------
# smallest_eigenvalues (internal solvers vs numpy oracle)
# ---------------------------------------------------------------------------


def test_smallest_eigenvalues_diagonal():
    assert np.allclose(smallest_eigenvalues(np.diag([3.0, 1.0, 2.0]), 2), [1.0, 2.0])


def test_smallest_eigenvalues_identity():
    assert np.allclose(smallest_eigenvalues(np.eye(4), 3), [1.0, 1.0, 1.0])


def test_smallest_eigenvalues_random_vs_oracle(rng):
    x = rng.standard_normal((8, 8))
    m = 0.5 * (x + x.T)
    got = smallest_eigenvalues(m, 4)
    oracle = np.linalg.eigvalsh(m)[:4]
    assert np.allclose(got, oracle, atol=1e-9 * np.linalg.norm(m, 2))


def test_smallest_eigenvalues_not_symmetric():
    with pytest.raises(NotSymmetric):
        smallest_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)


@settings(max_examples=120, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_jacobi_path_vs_oracle(dim, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((dim, dim))
    m = 0.5 * (x + x.T) * 10.0 ** rng.integers(-3, 4)
    got = smallest_eigenvalues(m, dim)
    oracle = np.linalg.eigvalsh(m)
    scale = max(np.linalg.norm(m, 2), 1e-300)
    assert np.allclose(got, oracle, atol=1e-9 * scale)


def test_ql_path_vs_oracle(rng):
    # dimensions above the Jacobi cutoff exercise tridiagonalization + QL
    for dim in (65, 80, 100):
        x = rng.standard_normal((dim, dim))
        m = 0.5 * (x + x.T)
        got = smallest_eigenvalues(m, 6)
        oracle = np.linalg.eigvalsh(m)[:6]
        assert np.allclose(got, oracle, atol=1e-9 * np.linalg.norm(m, 2))


def test_ql_path_degenerate_spectrum(rng):
    # repeated eigenvalues with a random basis
    dim = 70
    q = haar_orthogonal(rng, dim)
    w = np.repeat([1.0, 2.0, 2.0, 5.0, 5.0, 5.0, 9.0], 10)
    m = (q * w) @ q.T
    m = 0.5 * (m + m.T)
    got = smallest_eigenvalues(m, dim)
    oracle = np.linalg.eigvalsh(m)
    assert np.allclose(got, oracle, atol=1e-9 * np.linalg.norm(m, 2))


def test_symmetric_psd_sqrt(rng):
    for _ in range(100):
        d = int(rng.integers(1, 5))
        x = rng.standard_normal((d, d))
        m = x @ x.T
        r = symmetric_psd_sqrt(m)
        assert np.allclose(r @ r, m, atol=1e-10 * max(1.0, np.linalg.norm(m)))
        assert np.allclose(r, r.T, atol=1e-12)
        assert np.linalg.eigvalsh(r).min() >= -1e-12
