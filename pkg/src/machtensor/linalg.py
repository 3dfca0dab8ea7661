"""Truncated SVD and best rank-k approximation.

Matricizations are short and very wide, so the default route forms the
Gram matrix of the shorter side, takes its top eigenvectors and finishes
with a small exact SVD of the projected block (a Rayleigh-Ritz step) so the
singular values do not suffer the squaring of the Gram matrix. Matrices
whose short side exceeds ``GRAM_LIMIT`` use a seeded block subspace
iteration instead.

Sign convention: in each left singular vector the entry of largest
magnitude is nonnegative (lowest index wins ties) and the right vector
flips with it.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import sparse

from .errors import ArgumentError, ConvergenceError

GRAM_LIMIT = 512
OVERSAMPLE = 8
MAX_ITERATIONS = 300
ANGLE_TOL = 1e-10
START_SEED = 0x5EED


class TruncatedSvd(NamedTuple):
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    def reconstruct(self):
        return (self.left * self.singular_values) @ self.right.T


def _check_rank(shape, k):
    if int(k) != k or k < 1 or k > min(shape):
        raise ArgumentError(f"rank {k} out of range for a {shape[0]}x{shape[1]} matrix")
    return int(k)


def _as_operand(m):
    if sparse.issparse(m):
        return sparse.csr_matrix(m, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ArgumentError(f"expected a 2-D matrix, got {m.ndim} dimensions")
    return m


def _dense(x):
    return x.toarray() if sparse.issparse(x) else np.asarray(x)


def _fix_signs(u, v):
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivots, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, v * signs


def _ritz(a, basis, k, basis_is_left):
    """Exact SVD of ``a`` restricted to an orthonormal basis of one side."""
    if basis_is_left:
        block = _dense(a.T @ basis).T  # basis^T a, shape (b, n)
        ub, s, vt = np.linalg.svd(block, full_matrices=False)
        u, v = basis @ ub[:, :k], vt[:k].T
    else:
        block = _dense(a @ basis)  # shape (m, b)
        ub, s, vt = np.linalg.svd(block, full_matrices=False)
        u, v = ub[:, :k], basis @ vt[:k].T
    return u, s[:k], v


def _gram_route(a, k):
    rows, cols = a.shape
    if rows <= cols:
        gram = _dense(a @ a.T)
    else:
        gram = _dense(a.T @ a)
    gram = (gram + gram.T) / 2
    evals, vecs = np.linalg.eigh(gram, UPLO="L")
    # descending, keeping the lower-index eigenvector first within a tie
    order = np.argsort(-evals, kind="stable")[:k]
    basis = vecs[:, order]
    return _ritz(a, basis, k, basis_is_left=rows <= cols)


def _subspace_route(a, k):
    rows, cols = a.shape
    width = min(k + OVERSAMPLE, min(rows, cols))
    rng = np.random.default_rng(START_SEED)
    q, _ = np.linalg.qr(_dense(a @ rng.standard_normal((cols, width))))
    prev = None
    for _ in range(MAX_ITERATIONS):
        z, _ = np.linalg.qr(_dense(a.T @ q))
        q, _ = np.linalg.qr(_dense(a @ z))
        u, s, v = _ritz(a, q, width, basis_is_left=True)
        lead = u[:, :k]
        if prev is not None:
            # sine of the angle between each new Ritz vector and the old span
            drift = np.linalg.norm(lead - prev @ (prev.T @ lead), axis=0)
            if np.all(drift <= ANGLE_TOL):
                return u[:, :k], s[:k], v[:, :k]
        prev = lead
    bad = int(np.flatnonzero(drift > ANGLE_TOL)[0])
    raise ConvergenceError(
        f"singular vector {bad} did not converge in {MAX_ITERATIONS} iterations",
        index=bad,
    )


def truncated_svd(m, k, method="auto"):
    """Top-``k`` singular triplets of a dense or scipy-sparse matrix.

    Parameters
    ----------
    m : array_like or scipy.sparse matrix
    k : int
        Number of triplets, ``1 <= k <= min(m.shape)``.
    method : {"auto", "gram", "subspace"}
        ``auto`` picks the Gram route when the short side is at most
        ``GRAM_LIMIT``.

    Returns
    -------
    TruncatedSvd
        ``left`` (m x k), ``singular_values`` (k,), ``right`` (n x k).
    """
    a = _as_operand(m)
    k = _check_rank(a.shape, k)
    rows, cols = a.shape
    if (a.nnz if sparse.issparse(a) else np.count_nonzero(a)) == 0:
        eye_l = np.eye(rows, k)
        eye_r = np.eye(cols, k)
        return TruncatedSvd(eye_l, np.zeros(k), eye_r)

    if method == "auto":
        method = "gram" if min(rows, cols) <= GRAM_LIMIT else "subspace"
    if method == "gram":
        u, s, v = _gram_route(a, k)
    elif method == "subspace":
        u, s, v = _subspace_route(a, k)
    else:
        raise ArgumentError(f"unknown SVD method {method!r}")
    u, v = _fix_signs(u, v)
    return TruncatedSvd(u, np.maximum(s, 0.0), v)


def leading_left_singular_vectors(m, k, method="auto"):
    return truncated_svd(m, k, method=method).left


def low_rank_approx(m, k, method="auto"):
    """Best rank-``k`` approximation in Frobenius norm, as a dense array."""
    return truncated_svd(m, k, method=method).reconstruct()


def numerical_rank_deficient(singular_values, shape):
    """True when the k-th singular value is at roundoff level."""
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] == 0:
        return True
    return bool(s[-1] <= s[0] * max(shape) * np.finfo(float).eps)
