"""Dense and sparse tensors, matricization and mode-n products.

Modes are 0-based in the Python API (like numpy axes). The column order of
a matricization follows the common convention: along mode ``k``
the remaining indices are flattened with the lowest mode varying fastest,
which is a Fortran-order reshape once mode ``k`` is moved to the front.
"""

from __future__ import annotations

from math import prod

import numpy as np
from scipy import sparse

from .errors import ArgumentError, ShapeError

__all__ = [
    "DenseTensor",
    "SparseTensor",
    "as_tensor",
    "tensor_norm",
    "inner_product",
    "matricize",
    "refold",
    "mode_product",
    "multi_mode_product",
    "densify",
    "sparsify_exact",
]


def _check_dims(dims):
    dims = tuple(int(i) for i in dims)
    if len(dims) < 1:
        raise ShapeError("a tensor needs at least one mode")
    if any(i < 1 for i in dims):
        raise ShapeError(f"every dimension must be positive, got {dims}")
    return dims


def _check_mode(mode, ndim):
    if not 0 <= mode < ndim:
        raise ArgumentError(f"mode {mode} out of range for a {ndim}-mode tensor")
    return int(mode)


class DenseTensor:
    """Immutable d-mode array of float64 values.

    Parameters
    ----------
    data : array_like
        Either an array of shape ``dims`` or, when ``dims`` is given, a flat
        sequence of ``prod(dims)`` values in mode-1-fastest order.
    dims : sequence of int, optional
        Explicit dimension vector.
    """

    __slots__ = ("_data",)

    def __init__(self, data, dims=None):
        arr = np.asarray(data, dtype=np.float64)
        if dims is not None:
            dims = _check_dims(dims)
            if arr.size != prod(dims):
                raise ShapeError(
                    f"{arr.size} values cannot fill a tensor of dims {dims}"
                )
            arr = arr.reshape(dims, order="F")
        else:
            if arr.ndim == 0:
                arr = arr.reshape(1)
            _check_dims(arr.shape)
        if not np.all(np.isfinite(arr)):
            raise ArgumentError("tensor entries must be finite")
        # Fortran layout makes the mode-0 unfolding a free reshape.
        arr = np.array(arr, order="F", copy=True)
        arr.flags.writeable = False
        self._data = arr

    @property
    def data(self):
        """Read-only ndarray view of shape ``dims``."""
        return self._data

    @property
    def dims(self):
        return self._data.shape

    @property
    def ndim(self):
        return self._data.ndim

    @property
    def size(self):
        return self._data.size

    @property
    def values(self):
        """Flat values, mode-1 index varying fastest."""
        return self._data.ravel(order="F")

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __repr__(self):
        return f"DenseTensor(dims={self.dims})"


class SparseTensor:
    """Coordinate-list tensor with canonical storage.

    Entries are sorted by their mode-1-fastest linear index, duplicates are
    summed and explicit zeros dropped at construction, so two sparse tensors
    holding the same values have identical ``indices`` and ``values``.

    Parameters
    ----------
    dims : sequence of int
    indices : array_like of shape (nnz, d)
        0-based multi-indices.
    values : array_like of shape (nnz,)
    """

    __slots__ = ("_dims", "_indices", "_values", "_linear", "_unfoldings")

    def __init__(self, dims, indices, values):
        dims = _check_dims(dims)
        idx = np.asarray(indices, dtype=np.int64).reshape(-1, len(dims))
        vals = np.asarray(values, dtype=np.float64).reshape(-1)
        if idx.shape[0] != vals.shape[0]:
            raise ShapeError(
                f"{idx.shape[0]} indices but {vals.shape[0]} values"
            )
        if idx.size and (np.any(idx < 0) or np.any(idx >= np.array(dims))):
            raise ShapeError(f"sparse index outside dims {dims}")
        if not np.all(np.isfinite(vals)):
            raise ArgumentError("tensor entries must be finite")

        linear = _linear_index(idx, dims)
        if linear.size:
            if not np.all(linear[1:] > linear[:-1]):
                order = np.argsort(linear, kind="stable")
                linear, vals, idx = linear[order], vals[order], idx[order]
            starts = np.flatnonzero(np.r_[True, linear[1:] != linear[:-1]])
            if starts.size != linear.size:
                vals = np.add.reduceat(vals, starts)
                linear, idx = linear[starts], idx[starts]
            keep = vals != 0.0
            linear, vals, idx = linear[keep], vals[keep], idx[keep]

        for arr in (idx, vals, linear):
            arr.flags.writeable = False
        self._dims = dims
        self._indices = idx
        self._values = vals
        self._linear = linear
        self._unfoldings = {}

    @classmethod
    def from_linear(cls, dims, linear, values):
        """Build from mode-1-fastest linear indices (0-based)."""
        dims = _check_dims(dims)
        linear = np.asarray(linear, dtype=np.int64)
        idx = np.stack(np.unravel_index(linear, dims, order="F"), axis=1)
        return cls(dims, idx, values)

    @property
    def dims(self):
        return self._dims

    @property
    def ndim(self):
        return len(self._dims)

    @property
    def size(self):
        return prod(self._dims)

    @property
    def nnz(self):
        return self._values.size

    @property
    def indices(self):
        return self._indices

    @property
    def values(self):
        return self._values

    @property
    def linear(self):
        """Mode-1-fastest linear index of every stored entry."""
        return self._linear

    @property
    def density(self):
        return self.nnz / self.size

    def __repr__(self):
        return f"SparseTensor(dims={self.dims}, nnz={self.nnz})"


def _linear_index(idx, dims):
    if idx.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.ravel_multi_index(tuple(idx.T), dims, order="F").astype(np.int64)


def as_tensor(t):
    """Pass tensors through, wrap anything array-like as a DenseTensor."""
    if isinstance(t, (DenseTensor, SparseTensor)):
        return t
    return DenseTensor(t)


def tensor_norm(t):
    """Square root of the sum of squared entries."""
    t = as_tensor(t)
    return float(np.linalg.norm(t.values))


def inner_product(x, y):
    x, y = as_tensor(x), as_tensor(y)
    if x.dims != y.dims:
        raise ShapeError(f"inner product of dims {x.dims} and {y.dims}")
    if isinstance(x, SparseTensor) and isinstance(y, SparseTensor):
        common, ix, iy = np.intersect1d(
            x.linear, y.linear, assume_unique=True, return_indices=True
        )
        return float(np.dot(x.values[ix], y.values[iy]))
    if isinstance(x, SparseTensor):
        x, y = y, x
    if isinstance(y, SparseTensor):
        return float(np.dot(x.values[y.linear], y.values))
    return float(np.dot(x.values, y.values))


def matricize(t, mode):
    """Unfold ``t`` along ``mode`` into an ``I_mode x prod(others)`` matrix.

    Dense input gives an ndarray, sparse input a ``scipy.sparse`` CSR matrix.
    """
    t = as_tensor(t)
    mode = _check_mode(mode, t.ndim)
    dims = t.dims
    ncols = prod(dims) // dims[mode]
    if isinstance(t, SparseTensor):
        # cached per mode; callers must not modify the returned matrix
        cached = t._unfoldings.get(mode)
        if cached is None:
            rest = [q for q in range(t.ndim) if q != mode]
            rows = t.indices[:, mode]
            if rest:
                cols = _linear_index(
                    t.indices[:, rest], tuple(dims[q] for q in rest)
                )
            else:
                cols = np.zeros(t.nnz, dtype=np.int64)
            cached = sparse.csr_matrix(
                (t.values, (rows, cols)), shape=(dims[mode], ncols)
            )
            t._unfoldings[mode] = cached
        return cached
    return np.moveaxis(t.data, mode, 0).reshape(dims[mode], ncols, order="F")


def refold(m, mode, dims):
    """Inverse of :func:`matricize` for dense tensors."""
    dims = _check_dims(dims)
    mode = _check_mode(mode, len(dims))
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    expected = (dims[mode], prod(dims) // dims[mode])
    if m.shape != expected:
        raise ArgumentError(
            f"matrix of shape {m.shape} cannot refold to dims {dims} "
            f"along mode {mode}; expected {expected}"
        )
    moved = (dims[mode],) + dims[:mode] + dims[mode + 1:]
    return DenseTensor(np.moveaxis(m.reshape(moved, order="F"), 0, mode))


def mode_product(t, m, mode):
    """Mode-n product ``t x_mode m``.

    ``m`` must have ``I_mode`` columns; the result replaces that dimension
    with ``m.shape[0]``. Sparse tensors only touch their stored entries and
    yield a dense result.
    """
    t = as_tensor(t)
    mode = _check_mode(mode, t.ndim)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != t.dims[mode]:
        raise ShapeError(
            f"matrix of shape {m.shape} cannot multiply mode {mode} "
            f"of size {t.dims[mode]}"
        )
    unfolded = matricize(t, mode)
    if sparse.issparse(unfolded):
        product = np.asarray((unfolded.T @ m.T).T)
    else:
        product = m @ unfolded
    new_dims = t.dims[:mode] + (m.shape[0],) + t.dims[mode + 1:]
    return refold(product, mode, new_dims)


def multi_mode_product(t, matrices, modes=None, transpose=False, skip=None):
    """Apply a sequence of mode products.

    ``matrices[i]`` multiplies mode ``modes[i]`` (all modes by default);
    with ``transpose=True`` each matrix is transposed first, which is how
    factor matrices project a tensor onto a core. ``skip`` leaves one mode
    untouched.
    """
    t = as_tensor(t)
    if modes is None:
        modes = range(len(matrices))
    for mat, mode in zip(matrices, modes):
        if mode == skip:
            continue
        mat = np.asarray(mat)
        t = mode_product(t, mat.T if transpose else mat, mode)
    return t


def densify(s):
    s = as_tensor(s)
    if isinstance(s, DenseTensor):
        return s
    flat = np.zeros(s.size)
    flat[s.linear] = s.values
    return DenseTensor(flat, s.dims)


def sparsify_exact(t):
    """Lossless sparse copy of ``t``; only exact zeros are dropped."""
    t = as_tensor(t)
    if isinstance(t, SparseTensor):
        return t
    flat = t.values
    linear = np.flatnonzero(flat)
    return SparseTensor.from_linear(t.dims, linear, flat[linear])
