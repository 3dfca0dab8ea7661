import numpy as np
import pytest
from scipy import stats

from machtensor import TuckerModel, compare, hooi, hosvd, pc_correlation, pearson
from machtensor.errors import ShapeError
from machtensor.metrics import UndefinedCorrelation

from conftest import random_tensor


def textbook_pearson(x, y):
    n = len(x)
    sx, sy = sum(x), sum(y)
    num = n * sum(a * b for a, b in zip(x, y)) - sx * sy
    den = ((n * sum(a * a for a in x) - sx**2) * (n * sum(b * b for b in y) - sy**2)) ** 0.5
    return num / den


def test_affine_copy_correlates_perfectly(rng):
    x = rng.standard_normal(50)
    assert pearson(x, 3 * x + 7) == pytest.approx(1.0, abs=1e-12)
    assert pearson(x, -2 * x + 1) == pytest.approx(-1.0, abs=1e-12)


def test_matches_textbook_and_scipy(rng):
    x = rng.standard_normal(1000)
    y = 0.4 * x + rng.standard_normal(1000)
    value = pearson(x, y)
    assert value == pytest.approx(textbook_pearson(x.tolist(), y.tolist()), abs=1e-12)
    assert value == pytest.approx(stats.pearsonr(x, y).statistic, abs=1e-12)


def test_zero_variance_is_undefined():
    with pytest.raises(UndefinedCorrelation):
        pearson(np.ones(5), np.arange(5.0))


def test_length_mismatch():
    with pytest.raises(ShapeError):
        pearson(np.arange(3.0), np.arange(4.0))


def negate_factor(model, mode):
    factors = list(model.factors)
    factors[mode] = -factors[mode]
    return TuckerModel(
        core=model.core,
        factors=tuple(factors),
        iterations=model.iterations,
        fit=model.fit,
        fit_history=model.fit_history,
        singular_values=model.singular_values,
        warnings=model.warnings,
    )


def test_sign_alignment(rng):
    model = hosvd(random_tensor(rng, (6, 7, 8)), (2, 2, 2))
    flipped = negate_factor(model, 1)
    result = pc_correlation(model, flipped, 1)
    assert result.flipped
    assert result.rho == pytest.approx(1.0, abs=1e-12)
    assert not pc_correlation(model, flipped, 0).flipped


def test_compare_with_itself(rng):
    t = random_tensor(rng, (5, 6, 7))
    model = hooi(t, (2, 3, 2))
    report = compare(model, model, t)
    assert all(r == pytest.approx(1.0, abs=1e-12) for r in report.per_mode_rho)
    assert all(a < 1e-6 for a in report.subspace_angle)
    assert report.accuracy_exact == report.accuracy_mach
    assert report.core_interaction[0] == report.core_interaction[1]


def test_compare_invariant_to_sign_flips(rng):
    t = random_tensor(rng, (5, 6, 7))
    a = hosvd(t, (2, 2, 2))
    b = hooi(t, (2, 2, 2))
    base = compare(a, b, t)
    flipped = compare(a, negate_factor(negate_factor(b, 0), 2), t)
    np.testing.assert_allclose(base.per_mode_rho, flipped.per_mode_rho, atol=1e-12)
    np.testing.assert_allclose(base.subspace_angle, flipped.subspace_angle, atol=1e-12)


def test_tie_flag():
    # identical leading singular values along every mode
    data = np.zeros((3, 3, 3))
    data[0, 0, 0] = data[1, 1, 1] = 1.0
    model = hosvd(data, (2, 2, 2))
    report = compare(model, model, data)
    assert all(report.tied)


def test_report_text(rng):
    t = random_tensor(rng, (4, 4, 4))
    model = hosvd(t, (2, 2, 2))
    text = compare(model, model, t).to_text()
    assert "mode_1.rho = " in text and "mode_3.tied = " in text
    assert "accuracy_mach = " in text
