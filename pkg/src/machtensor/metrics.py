"""Agreement between an exact and an approximate Tucker model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import subspace_angles

from .decomp import accuracy
from .errors import ArgumentError, ShapeError

# Relative gap between the first two singular values below which the
# leading component is treated as tied.
TIE_GAP = 1e-6


class UndefinedCorrelation(ArgumentError):
    """Pearson correlation of a constant vector."""


def pearson(x, y):
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ShapeError(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise ArgumentError("need at least two samples")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.linalg.norm(dx), np.linalg.norm(dy)
    if sx == 0 or sy == 0:
        raise UndefinedCorrelation("correlation is undefined for zero variance")
    return float(np.clip(np.dot(dx / sx, dy / sy), -1.0, 1.0))


class PcCorrelation(NamedTuple):
    rho: float
    flipped: bool


def pc_correlation(exact, approx, mode, component=0):
    """Correlation between matching factor columns after sign alignment.

    The approximate column is negated when its inner product with the exact
    one is negative, which removes the sign ambiguity of singular vectors.
    ``flipped`` records whether that happened.
    """
    if exact.dims != approx.dims:
        raise ShapeError(f"model dims differ: {exact.dims} vs {approx.dims}")
    a, b = exact.factors[mode], approx.factors[mode]
    if not 0 <= component < min(a.shape[1], b.shape[1]):
        raise ArgumentError(f"component {component} not present in mode {mode}")
    u, v = a[:, component], b[:, component]
    flipped = bool(np.dot(u, v) < 0)
    return PcCorrelation(pearson(u, -v if flipped else v), flipped)


@dataclass(frozen=True)
class ComparisonReport:
    per_mode_rho: tuple
    flipped: tuple
    subspace_angle: tuple
    tied: tuple
    accuracy_exact: float
    accuracy_mach: float
    core_interaction: tuple

    def to_text(self):
        lines = [
            f"accuracy_exact = {self.accuracy_exact!r}",
            f"accuracy_mach = {self.accuracy_mach!r}",
            f"core_interaction.exact = {self.core_interaction[0]!r}",
            f"core_interaction.mach = {self.core_interaction[1]!r}",
        ]
        for mode in range(len(self.per_mode_rho)):
            key = f"mode_{mode + 1}"
            lines += [
                f"{key}.rho = {self.per_mode_rho[mode]!r}",
                f"{key}.flipped = {str(self.flipped[mode]).lower()}",
                f"{key}.subspace_angle = {self.subspace_angle[mode]!r}",
                f"{key}.tied = {str(self.tied[mode]).lower()}",
            ]
        return "\n".join(lines) + "\n"

    def to_table(self):
        rows = ["mode  rho        flipped  angle(rad)  tied"]
        for mode in range(len(self.per_mode_rho)):
            rows.append(
                f"{mode + 1:<5} {self.per_mode_rho[mode]:<10.6f} "
                f"{str(self.flipped[mode]):<8} {self.subspace_angle[mode]:<11.3e} "
                f"{self.tied[mode]}"
            )
        rows.append(f"accuracy exact {self.accuracy_exact:.6f}  mach {self.accuracy_mach:.6f}")
        rows.append(
            "g(1,...,1) exact {:.6f}  mach {:.6f}".format(*self.core_interaction)
        )
        return "\n".join(rows) + "\n"


def _tied(model, mode):
    if len(model.singular_values) <= mode:
        return False
    s = np.asarray(model.singular_values[mode])
    return bool(s.size > 1 and s[0] - s[1] <= TIE_GAP * max(s[0], np.finfo(float).tiny))


def compare(exact, approx, reference, component=0):
    """Summarise how well ``approx`` reproduces ``exact``.

    Per mode: sign-aligned PC correlation, the largest principal angle
    between the two factor subspaces and a flag when the exact leading
    singular value is tied. Both models are scored against ``reference``.
    """
    if exact.dims != approx.dims:
        raise ShapeError(f"model dims differ: {exact.dims} vs {approx.dims}")
    rhos, flips, angles, ties = [], [], [], []
    for mode in range(exact.ndim):
        pc = pc_correlation(exact, approx, mode, component)
        rhos.append(pc.rho)
        flips.append(pc.flipped)
        angles.append(
            float(np.max(subspace_angles(exact.factors[mode], approx.factors[mode])))
        )
        ties.append(_tied(exact, mode))
    first = (0,) * exact.ndim
    return ComparisonReport(
        per_mode_rho=tuple(rhos),
        flipped=tuple(flips),
        subspace_angle=tuple(angles),
        tied=tuple(ties),
        accuracy_exact=accuracy(reference, exact),
        accuracy_mach=accuracy(reference, approx),
        core_interaction=(
            float(exact.core.data[first]),
            float(approx.core.data[first]),
        ),
    )
