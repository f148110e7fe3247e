"""Dense linear-algebra primitives: polar projection, quotient distance,
truncated SVD, symmetric eigensolves.

All functions are pure and operate on float64 arrays; none of them mutate
their inputs, so they are safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

from .blocks import BlockStack
from .errors import GoppError, NoSpectralGap, NotSymmetric, ShapeMismatch

DEGENERATE_SV_TOL = 1e-12
SPECTRAL_GAP_TOL = 1e-12
FULL_SVD_MAX_ROWS = 512
SUBSPACE_RESIDUAL_TOL = 1e-10
SUBSPACE_MAX_ITERS = 10_000
JACOBI_MAX_DIM = 64


def _check_finite(x, name="matrix"):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def _canonicalize_svd(u, s, vt, degenerate_tol=DEGENERATE_SV_TOL):
    """Fix singular-vector signs so U @ Vt is reproducible.

    For each right singular vector, the largest-magnitude entry is made
    positive (ties broken by lowest index).  For singular values above the
    degeneracy threshold the matching left vector is flipped too, which
    leaves the product U @ diag(s) @ Vt intact; below it, left and right
    vectors are free of each other and each is canonicalized independently.
    """
    u = u.copy()
    vt = vt.copy()
    for k in range(vt.shape[0]):
        row = vt[k]
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            vt[k] = -row
            if k < u.shape[1]:
                u[:, k] = -u[:, k]
    for k in range(min(u.shape[1], s.shape[0])):
        if s[k] < degenerate_tol:
            col = u[:, k]
            j = int(np.argmax(np.abs(col)))
            if col[j] < 0:
                u[:, k] = -col
    return u, vt


def polar(x, return_degenerate=False):
    """Project a square matrix onto the orthogonal group.

    Returns U @ Vt from the SVD x = U S Vt, the closest orthogonal matrix
    to x in Frobenius norm.  For invertible x this equals
    x @ (x.T @ x)^{-1/2}.

    Parameters
    ----------
    x : (d, d) array_like
    return_degenerate : bool
        When True, also return a flag telling whether the smallest singular
        value fell below 1e-12, in which case the projection is not unique
        and a fixed deterministic choice is returned.
    """
    x = _check_finite(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ShapeMismatch(f"polar expects a square matrix, got {x.shape}")
    u, s, vt = np.linalg.svd(x)
    u, vt = _canonicalize_svd(u, s, vt)
    q = u @ vt
    if return_degenerate:
        return q, bool(s[-1] < DEGENERATE_SV_TOL)
    return q


def polar_blockwise(stack: BlockStack, return_degenerate=False):
    """Apply the polar projection to each d x d block of a stack."""
    b = stack.blocks()
    u, s, vt = np.linalg.svd(b)
    # Vectorized sign convention, matching _canonicalize_svd block by block.
    j = np.argmax(np.abs(vt), axis=2)
    flip = np.take_along_axis(vt, j[:, :, None], axis=2)[:, :, 0] < 0
    sign = np.where(flip, -1.0, 1.0)
    vt = vt * sign[:, :, None]
    u = u * sign[:, None, :]
    degenerate = s[:, -1] < DEGENERATE_SV_TOL
    if degenerate.any():
        for i in np.nonzero(degenerate)[0]:
            small = s[i] < DEGENERATE_SV_TOL
            for k in np.nonzero(small)[0]:
                col = u[i][:, k]
                jj = int(np.argmax(np.abs(col)))
                if col[jj] < 0:
                    u[i][:, k] = -col
    q = u @ vt
    out = BlockStack(stack.n, stack.d, q.reshape(stack.n * stack.d, stack.d),
                     orthogonal=True)
    if return_degenerate:
        return out, degenerate
    return out


def nuclear_norm(x) -> float:
    """Sum of singular values."""
    x = _check_finite(x)
    return float(np.linalg.svd(x, compute_uv=False).sum())


def df_distance(x: BlockStack, y: BlockStack) -> float:
    """Frobenius distance between stacks modulo a common right rotation.

    Computes min_Q ||X - Y Q||_F over orthogonal Q via the closed form
    sqrt(||X||_F^2 + ||Y||_F^2 - 2 ||Y.T X||_*).  Near zero the closed form
    cancels catastrophically (noise floor ~sqrt(eps * n * d)), so distances
    below 1e-4 of the stack scale are re-evaluated through the minimizing
    rotation Q = polar(Y.T X) directly, which is exact there.
    """
    if not x.same_shape(y):
        raise ShapeMismatch(
            f"stacks differ: ({x.n}, {x.d}) vs ({y.n}, {y.d})"
        )
    gram = y.data.T @ x.data
    scale_sq = (x.data**2).sum() + (y.data**2).sum()
    sq = scale_sq - 2.0 * nuclear_norm(gram)
    if sq <= 1e-8 * scale_sq:
        q = polar(gram)
        return float(np.linalg.norm(x.data - y.data @ q))
    return float(np.sqrt(sq))


def align(x: BlockStack, y: BlockStack) -> np.ndarray:
    """Orthogonal Q minimizing ||X - Y Q||_F, namely polar(Y.T @ X)."""
    if not x.same_shape(y):
        raise ShapeMismatch(
            f"stacks differ: ({x.n}, {x.d}) vs ({y.n}, {y.d})"
        )
    return polar(y.data.T @ x.data)


def _svd_gap_check(s, d, n_rows, n_cols):
    s1 = s[0] if len(s) else 0.0
    sd = s[d - 1]
    sd1 = s[d] if d < min(n_rows, n_cols) and d < len(s) else 0.0
    if sd - sd1 < SPECTRAL_GAP_TOL * s1:
        raise NoSpectralGap(
            f"singular values {d} and {d + 1} coincide: "
            f"{sd:.6e} vs {sd1:.6e} (top {s1:.6e})"
        )


def _subspace_iteration(d_mat, d, tol, max_iters):
    """Orthogonal iteration on D @ D.T with Rayleigh-Ritz extraction.

    Iterates a block of d+1 vectors (when available) so the spectral gap at
    d can be checked from the Ritz values.  Returns (U, ritz_svals).
    """
    nd, m = d_mat.shape
    k = min(d + 1, nd, m)
    # Deterministic start: fixed-seed Gaussian block.
    rng = np.random.Generator(np.random.Philox(0x5EED0F5A11))
    q, _ = np.linalg.qr(rng.standard_normal((nd, k)))
    u = q
    resid = np.inf
    w = np.zeros(k)
    for _ in range(max_iters):
        y = d_mat @ (d_mat.T @ q)
        q, _ = np.linalg.qr(y)
        # Rayleigh-Ritz on G = D D^T restricted to span(q).
        b = d_mat.T @ q
        w, v = np.linalg.eigh(b.T @ b)
        order = np.argsort(w)[::-1]
        w = w[order]
        u = q @ v[:, order]
        gu = d_mat @ (d_mat.T @ u)
        resid = float(np.linalg.norm(gu - u @ (u.T @ gu), ord="fro"))
        if resid <= tol * max(w[0], 1e-300):
            break
    if resid > 1e-8 * max(w[0], 1e-300):
        raise GoppError(
            f"subspace iteration stalled: residual {resid:.3e} "
            f"after {max_iters} iterations"
        )
    return u, np.sqrt(np.clip(w, 0.0, None))


def top_left_singular_vectors(d_mat, d: int, method: str = "auto") -> BlockStack:
    """Orthonormal basis of the top-d left singular subspace of an nd x m matrix.

    The result is returned as a BlockStack of n = rows/d blocks (the blocks
    are generally not orthogonal; they feed the blockwise polar projection).

    Parameters
    ----------
    d_mat : (n*d, m) array_like, with m >= d
    d : int
        Subspace dimension; also the block size of the returned stack.
    method : {"auto", "full", "subspace"}
        "auto" uses a full SVD for nd <= 512 and subspace iteration above;
        the explicit values force one path (used for cross-validation).

    Raises
    ------
    NoSpectralGap
        When sigma_d(D) - sigma_{d+1}(D) < 1e-12 * sigma_1(D).
    """
    d_mat = _check_finite(d_mat, "data matrix")
    nd, m = d_mat.shape
    if nd % d != 0:
        raise ShapeMismatch(f"row count {nd} is not a multiple of d={d}")
    if m < d:
        raise ShapeMismatch(f"need m >= d, got m={m}, d={d}")
    if method not in ("auto", "full", "subspace"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "full" if nd <= FULL_SVD_MAX_ROWS else "subspace"
    if method == "full":
        u, s, _ = np.linalg.svd(d_mat, full_matrices=False)
        _svd_gap_check(s, d, nd, m)
        u_top = u[:, :d]
    else:
        u_top, sv = _subspace_iteration(
            d_mat, d, SUBSPACE_RESIDUAL_TOL, SUBSPACE_MAX_ITERS
        )
        _svd_gap_check(sv, d, nd, m)
        u_top = u_top[:, :d]
    return BlockStack(nd // d, d, np.ascontiguousarray(u_top))


# ---------------------------------------------------------------------------
# Internal symmetric eigensolvers (cyclic Jacobi; Householder + implicit QL)
# ---------------------------------------------------------------------------


def _jacobi_eigh(a, max_sweeps=60):
    """Cyclic Jacobi with threshold skipping; returns (values asc, vectors)."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.ravel().copy(), v
    anorm = np.linalg.norm(a, ord="fro")
    for sweep in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= 1e-15 * max(anorm, 1e-300):
            break
        # Skip tiny pivots in early sweeps; rotate everything later.
        thresh = 0.2 * off / (n * n) if sweep < 3 else 0.0
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                small = 1e-18 * max(abs(a[p, p]), abs(a[q, q]), 1e-300)
                if abs(apq) <= max(thresh, small):
                    continue
                rotated = True
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # Update rows/columns p and q of the symmetric matrix.
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        if not rotated:
            break
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _householder_tridiag(a):
    """Reduce symmetric a to tridiagonal form; returns (diag, offdiag)."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(max(n - 1, 0))
    for k in range(n - 2):
        x = a[k + 1 :, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            e[k] = 0.0
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            e[k] = alpha
            continue
        v /= vnorm
        # Apply the reflector H = I - 2 v v^T to the trailing block.
        sub = a[k + 1 :, k + 1 :]
        w = sub @ v
        tau = v @ w
        sub -= 2.0 * np.outer(v, w) + 2.0 * np.outer(w, v) - 4.0 * tau * np.outer(v, v)
        a[k + 1 :, k + 1 :] = sub
        a[k + 1 :, k] = 0.0
        a[k, k + 1 :] = 0.0
        a[k + 1, k] = alpha
        a[k, k + 1] = alpha
        e[k] = alpha
    if n >= 2:
        e[n - 2] = a[n - 1, n - 2]
    d[:] = np.diag(a)
    return d, e


def _tql_implicit(d, e, max_iters=80):
    """Implicit-shift QL on a symmetric tridiagonal; eigenvalues ascending."""
    d = d.copy()
    n = d.shape[0]
    if n == 1:
        return d
    e = np.append(e.copy(), 0.0)
    eps = np.finfo(float).eps
    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            iters += 1
            if iters > max_iters:
                raise GoppError("implicit QL failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + np.copysign(r, g))
            s = c = 1.0
            p = 0.0
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            else:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    return np.sort(d, kind="stable")


def symmetric_eigenvalues(m_mat) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending (internal solver)."""
    m_mat = np.asarray(m_mat, dtype=np.float64)
    n = m_mat.shape[0]
    if n <= JACOBI_MAX_DIM:
        w, _ = _jacobi_eigh(m_mat)
        return w
    d, e = _householder_tridiag(m_mat)
    return _tql_implicit(d, e)


def smallest_eigenvalues(m_mat, k: int) -> np.ndarray:
    """The k smallest eigenvalues of a symmetric matrix, ascending.

    The matrix must be symmetric to relative tolerance 1e-10; it is
    symmetrized internally before solving.  Uses cyclic Jacobi for
    dimension <= 64, Householder tridiagonalization plus implicit QL above.
    """
    m_mat = _check_finite(m_mat, "symmetric matrix")
    if m_mat.ndim != 2 or m_mat.shape[0] != m_mat.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {m_mat.shape}")
    n = m_mat.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    asym = np.linalg.norm(m_mat - m_mat.T, ord="fro")
    scale = np.linalg.norm(m_mat, ord="fro")
    if asym > 1e-10 * max(scale, 1e-300):
        raise NotSymmetric(
            f"relative asymmetry {asym / max(scale, 1e-300):.3e} exceeds 1e-10"
        )
    sym = 0.5 * (m_mat + m_mat.T)
    return symmetric_eigenvalues(sym)[:k]


def symmetric_psd_sqrt(m_mat) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Negative eigenvalues (roundoff) are clamped to zero.  Uses the internal
    Jacobi solver; intended for small blocks.
    """
    m_mat = np.asarray(m_mat, dtype=np.float64)
    sym = 0.5 * (m_mat + m_mat.T)
    w, v = _jacobi_eigh(sym)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T
