"""MACH: entrywise Bernoulli sparsification followed by a Tucker solver.

Every entry is kept independently with probability ``p`` and rescaled by
``1/p``, so the sparse surrogate is an unbiased estimate of the input. The
coin for an entry is a pure function of ``(seed, linear index)``: sampling
a tensor at once, in chunks, or one measurement at a time as it streams in
gives the same result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decomp import HooiConfig, check_ranks, hooi, hosvd
from .errors import ArgumentError, ShapeError
from .linalg import truncated_svd
from .tensor import SparseTensor, as_tensor, densify, matricize

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class SparsifyConfig:
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ArgumentError(f"keep probability must lie in (0, 1], got {self.p}")
        if not 0 <= int(self.seed) < 2**64:
            raise ArgumentError("seed must be an unsigned 64-bit integer")


def _splitmix(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def entry_uniforms(seed, linear):
    """Uniform [0, 1) draws keyed by ``(seed, linear index)``.

    A splitmix64 finalizer applied to the index offset by a mixed seed; the
    draw for one entry never depends on which other entries are sampled.
    """
    with np.errstate(over="ignore"):
        key = _splitmix(np.array([seed], dtype=np.uint64) + _GOLDEN)[0]
        counters = np.asarray(linear, dtype=np.int64).astype(np.uint64)
        bits = _splitmix(counters * _GOLDEN + key)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


def sparsify(t, cfg):
    """Keep each nonzero entry with probability ``cfg.p``, scaled by ``1/p``.

    Zeros are never emitted. Accepts a dense or sparse tensor; both give
    the same output for the same values.
    """
    t = as_tensor(t)
    if isinstance(t, SparseTensor):
        linear, vals = t.linear, t.values
    else:
        flat = t.values
        linear = np.flatnonzero(flat)
        vals = flat[linear]
    keep = entry_uniforms(cfg.seed, linear) < cfg.p
    return SparseTensor.from_linear(t.dims, linear[keep], vals[keep] / cfg.p)


def sparsify_stream(dims, measurements, cfg):
    """Streaming sparsifier: yield ``(index, value / p)`` for kept entries.

    ``measurements`` is an iterable of ``(multi_index, value)`` pairs with
    0-based indices. The outcome for each entry matches :func:`sparsify`.
    """
    dims = tuple(dims)
    for index, value in measurements:
        if value == 0:
            continue
        linear = np.ravel_multi_index(tuple(index), dims, order="F")
        if entry_uniforms(cfg.seed, [linear])[0] < cfg.p:
            yield tuple(index), value / cfg.p


def _decomposition_operand(xhat, cfg):
    # p == 1 keeps every entry unchanged, so the dense form is exact.
    return densify(xhat) if cfg.p == 1 else xhat


def mach_hosvd(t, ranks, cfg):
    """Sparsify ``t`` then run HOSVD; returns ``(model, sparsified)``."""
    xhat = sparsify(t, cfg)
    return hosvd(_decomposition_operand(xhat, cfg), ranks), xhat


def mach_hooi(t, ranks, scfg, hcfg=None):
    """Sparsify ``t`` then run HOOI; returns ``(model, sparsified)``."""
    xhat = sparsify(t, scfg)
    return hooi(_decomposition_operand(xhat, scfg), ranks, hcfg or HooiConfig()), xhat


def min_sampling_probability(dims):
    """Smallest keep probability covered by the error guarantee.

    ``max_j (8 * sum_{k != j} ln I_k)^4 / prod_{k != j} I_k``. Values above
    1 mean the guarantee cannot apply to tensors of this shape.
    """
    dims = [int(i) for i in dims]
    best = 0.0
    for j in range(len(dims)):
        others = dims[:j] + dims[j + 1:]
        log_sum = sum(math.log(i) for i in others)
        best = max(best, (8.0 * log_sum) ** 4 / math.prod(others))
    return best


def achlioptas_bounds(b, n, k, p):
    """Spectral and Frobenius bounds on the rank-k part of the sampling noise.

    Returns ``(4 b sqrt(n/p), 4 b sqrt(n k / p))``.
    """
    if b < 0 or n < 1 or k < 1 or not 0 < p <= 1:
        raise ArgumentError("need b >= 0, n >= 1, k >= 1 and 0 < p <= 1")
    return 4.0 * b * math.sqrt(n / p), 4.0 * b * math.sqrt(n * k / p)


def success_probability(dims):
    dims = [int(i) for i in dims]
    prob = 1.0
    for i in range(len(dims)):
        log_sum = sum(math.log(dims[k]) for k in range(len(dims)) if k != i)
        prob *= 1.0 - math.exp(-19.0 * log_sum)
    return prob


@dataclass(frozen=True)
class ModeBound:
    rank: int
    residual_x: float
    lowrank_norm_x: float
    residual_xhat: float
    sampling_term: float
    cross_term: float
    other_residuals: float
    t: float


@dataclass(frozen=True)
class BoundReport:
    b: float
    p: float
    per_mode: tuple
    t: float
    p_min: float
    success_probability: float
    conditions: dict = field(default_factory=dict)

    @property
    def conditions_met(self):
        return all(self.conditions.values())

    def to_text(self):
        lines = [
            f"b = {self.b!r}",
            f"p = {self.p!r}",
            f"p_min = {self.p_min!r}",
            f"t = {self.t!r}",
            f"success_probability = {self.success_probability!r}",
        ]
        for name, ok in self.conditions.items():
            lines.append(f"condition.{name} = {str(ok).lower()}")
        lines.append(f"conditions_met = {str(self.conditions_met).lower()}")
        if not self.conditions_met:
            lines.append("warning = assumptions of the guarantee do not hold")
        for mode, rec in enumerate(self.per_mode, start=1):
            for key, value in vars(rec).items():
                lines.append(f"mode_{mode}.{key} = {value!r}")
        return "\n".join(lines) + "\n"


def _residual(unfolded, r):
    svd = truncated_svd(unfolded, r)
    dense = unfolded.toarray() if hasattr(unfolded, "toarray") else unfolded
    residual = float(np.linalg.norm(dense - svd.reconstruct()))
    return residual, float(np.linalg.norm(svd.singular_values))


def theorem1_bound(x, xhat, ranks, p):
    """Evaluate the MACH-HOSVD error bound for a concrete sample.

    ``b`` is the largest absolute entry of the original ``x``. Per mode,
    ``t_i`` adds the rank-r_i residual of ``x``, the two sampling terms and
    the rank-r_j residuals of ``xhat`` along every other mode; ``t`` is the
    smallest ``t_i``. The bound is reported even when its assumptions fail.
    """
    x, xhat = densify(as_tensor(x)), as_tensor(xhat)
    if x.dims != xhat.dims:
        raise ShapeError(f"dims differ: {x.dims} vs {xhat.dims}")
    if not 0 < p <= 1:
        raise ArgumentError(f"keep probability must lie in (0, 1], got {p}")
    dims = x.dims
    ranks = check_ranks(dims, ranks)
    b = float(np.max(np.abs(x.values)))
    size = math.prod(dims)

    res_x, low_x, res_xhat = [], [], []
    for mode, r in enumerate(ranks):
        rx, lx = _residual(matricize(x, mode), r)
        rh, _ = _residual(matricize(xhat, mode), r)
        res_x.append(rx)
        low_x.append(lx)
        res_xhat.append(rh)

    per_mode = []
    for i, r in enumerate(ranks):
        scale = r / p * (size // dims[i])
        sampling = 4.0 * b * scale**0.5
        cross = 4.0 * (low_x[i] * b) ** 0.5 * scale**0.25
        others = sum(res_xhat[j] for j in range(len(dims)) if j != i)
        per_mode.append(
            ModeBound(
                rank=r,
                residual_x=res_x[i],
                lowrank_norm_x=low_x[i],
                residual_xhat=res_xhat[i],
                sampling_term=sampling,
                cross_term=cross,
                other_residuals=others,
                t=res_x[i] + sampling + cross + others,
            )
        )

    p_min = min_sampling_probability(dims)
    conditions = {
        "min_dimension_ge_76": all(i >= 76 for i in dims),
        "squared_dimension_le_size": all(i * i <= size for i in dims),
        "p_ge_p_min": p >= p_min,
    }
    return BoundReport(
        b=b,
        p=float(p),
        per_mode=tuple(per_mode),
        t=min(m.t for m in per_mode),
        p_min=p_min,
        success_probability=success_probability(dims),
        conditions=conditions,
    )
