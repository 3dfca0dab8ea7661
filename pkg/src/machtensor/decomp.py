"""Tucker decompositions: HOSVD and HOOI."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .errors import ArgumentError, ShapeError
from .linalg import numerical_rank_deficient, truncated_svd
from .tensor import (
    DenseTensor,
    SparseTensor,
    as_tensor,
    densify,
    matricize,
    multi_mode_product,
    tensor_norm,
)

# Sparse inputs denser than this are decomposed through the dense path.
DENSE_SWITCH = 0.5


@dataclass(frozen=True)
class TuckerModel:
    """Core tensor plus one orthonormal-column factor per mode.

    ``fit`` is measured against the tensor the model was fitted to and
    ``fit_history`` starts with the HOSVD initialisation for HOOI models.
    """

    core: DenseTensor
    factors: tuple
    iterations: int = 0
    fit: float = float("nan")
    fit_history: tuple = ()
    singular_values: tuple = ()
    warnings: tuple = field(default=())

    @property
    def ranks(self):
        return self.core.dims

    @property
    def dims(self):
        return tuple(f.shape[0] for f in self.factors)

    @property
    def ndim(self):
        return len(self.factors)


@dataclass(frozen=True)
class HooiConfig:
    max_iterations: int = 50
    fit_tolerance: float = 1e-4

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ArgumentError("max_iterations must be a positive integer")
        if not self.fit_tolerance >= 0:
            raise ArgumentError("fit_tolerance must be nonnegative")


def check_ranks(dims, ranks):
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(dims):
        raise ArgumentError(f"{len(ranks)} ranks given for a {len(dims)}-mode tensor")
    for mode, (r, size) in enumerate(zip(ranks, dims)):
        if not 1 <= r <= size:
            raise ArgumentError(f"rank {r} out of range 1..{size} for mode {mode}")
    return ranks


def _operand(t):
    t = as_tensor(t)
    if isinstance(t, SparseTensor) and t.density > DENSE_SWITCH:
        return densify(t)
    return t


def _complete_basis(u, r):
    """Extend orthonormal columns ``u`` to ``r`` columns."""
    extra = null_space(u.T)[:, : r - u.shape[1]]
    pivots = np.argmax(np.abs(extra), axis=0)
    extra = extra * np.sign(extra[pivots, np.arange(extra.shape[1])])
    return np.hstack([u, extra])


def _leading(unfolded, r, mode, warnings):
    # a rank may exceed the short side of the unfolding, e.g. full-rank
    # HOSVD of a 7x2x2 tensor; the surplus columns then carry no energy
    available = min(unfolded.shape)
    svd = truncated_svd(unfolded, min(r, available))
    u, s = svd.left, svd.singular_values
    if r > available:
        u = _complete_basis(u, r)
        s = np.concatenate([s, np.zeros(r - available)])
    if numerical_rank_deficient(s, unfolded.shape):
        warnings.append(
            f"mode {mode}: numerical rank below {r}; trailing factor columns "
            "are a deterministic basis completion"
        )
    return u, s


def _fit(t, core, factors, t_norm):
    if t_norm == 0:
        return float("nan")
    if isinstance(t, DenseTensor):
        residual = tensor_norm(
            DenseTensor(t.data - multi_mode_product(core, factors).data)
        )
    else:
        # ||X - X x_m A A^T||^2 = ||X||^2 - ||G||^2 for orthonormal factors
        residual = np.sqrt(max(t_norm**2 - tensor_norm(core) ** 2, 0.0))
    return 1.0 - residual / t_norm


def core_tensor(t, factors):
    """Project ``t`` onto the factor bases: ``t x_1 A1^T ... x_d Ad^T``."""
    t = as_tensor(t)
    if len(factors) != t.ndim:
        raise ShapeError(f"{len(factors)} factors for a {t.ndim}-mode tensor")
    for mode, (f, size) in enumerate(zip(factors, t.dims)):
        if np.asarray(f).shape[0] != size:
            raise ShapeError(
                f"factor {mode} has {np.asarray(f).shape[0]} rows, mode size is {size}"
            )
    return multi_mode_product(_operand(t), factors, transpose=True)


def reconstruct(model):
    """Full tensor ``core x_1 A1 ... x_d Ad``."""
    return multi_mode_product(model.core, model.factors)


def accuracy(t, model):
    """``1 - ||t - reconstruct(model)|| / ||t||``."""
    t = densify(as_tensor(t))
    norm = tensor_norm(t)
    if norm == 0:
        raise ArgumentError("accuracy is undefined for a zero reference tensor")
    approx = reconstruct(model)
    if approx.dims != t.dims:
        raise ShapeError(f"model dims {approx.dims} differ from tensor dims {t.dims}")
    return 1.0 - tensor_norm(DenseTensor(t.data - approx.data)) / norm


def hosvd(t, ranks):
    """Truncated higher-order SVD.

    Each factor holds the leading left singular vectors of the matching
    matricization; the core is the projection of ``t`` onto them.
    """
    t = _operand(t)
    ranks = check_ranks(t.dims, ranks)
    warnings = []
    factors, spectra = [], []
    for mode, r in enumerate(ranks):
        u, s = _leading(matricize(t, mode), r, mode, warnings)
        factors.append(u)
        spectra.append(s)
    core = multi_mode_product(t, factors, transpose=True)
    fit = _fit(t, core, factors, tensor_norm(t))
    return TuckerModel(
        core=core,
        factors=tuple(factors),
        iterations=0,
        fit=fit,
        fit_history=(fit,),
        singular_values=tuple(spectra),
        warnings=tuple(warnings),
    )


def hooi(t, ranks, cfg=None):
    """Higher-order orthogonal iteration, initialised with HOSVD.

    A sweep updates every mode in turn from the leading left singular
    vectors of ``t`` projected on all other factors. Iteration stops once
    the fit gains less than ``cfg.fit_tolerance`` or after
    ``cfg.max_iterations`` sweeps.
    """
    cfg = cfg or HooiConfig()
    t = _operand(t)
    init = hosvd(t, ranks)
    ranks = init.ranks
    t_norm = tensor_norm(t)
    factors = list(init.factors)
    spectra = list(init.singular_values)
    warnings = list(init.warnings)
    history = [init.fit]
    fit = init.fit
    sweeps = 0
    while sweeps < cfg.max_iterations:
        sweeps += 1
        sweep_warnings = []
        for mode, r in enumerate(ranks):
            y = multi_mode_product(t, factors, transpose=True, skip=mode)
            factors[mode], spectra[mode] = _leading(
                matricize(y, mode), r, mode, sweep_warnings
            )
        core = multi_mode_product(t, factors, transpose=True)
        previous, fit = fit, _fit(t, core, factors, t_norm)
        history.append(fit)
        if not abs(fit - previous) >= cfg.fit_tolerance:
            break
    warnings.extend(w for w in sweep_warnings if w not in warnings)
    return TuckerModel(
        core=core,
        factors=tuple(factors),
        iterations=sweeps,
        fit=fit,
        fit_history=tuple(history),
        singular_values=tuple(spectra),
        warnings=tuple(warnings),
    )
