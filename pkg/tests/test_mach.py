import math

import numpy as np
import pytest
from scipy import stats

from machtensor import (
    ArgumentError,
    DenseTensor,
    HooiConfig,
    SparsifyConfig,
    accuracy,
    achlioptas_bounds,
    densify,
    hooi,
    hosvd,
    mach_hooi,
    mach_hosvd,
    min_sampling_probability,
    reconstruct,
    sparsify,
    sparsify_exact,
    sparsify_stream,
    tensor_norm,
    theorem1_bound,
)
from machtensor.dataio import synth_cauchy_tensor
from machtensor.mach import entry_uniforms, success_probability

from conftest import bound_oracle, random_tensor


def models_identical(a, b):
    return np.array_equal(a.core.data, b.core.data) and all(
        np.array_equal(x, y) for x, y in zip(a.factors, b.factors)
    )


class TestSparsify:
    def test_p_one_is_identity(self, rng):
        t = random_tensor(rng, (4, 5, 6))
        np.testing.assert_array_equal(densify(sparsify(t, SparsifyConfig(1.0, 3))).data, t.data)

    def test_kept_entries_rescaled(self, rng):
        t = random_tensor(rng, (6, 6, 6))
        s = sparsify(t, SparsifyConfig(0.25, 11))
        np.testing.assert_array_equal(s.values, t.values[s.linear] / 0.25)

    def test_zeros_never_emitted(self, rng):
        data = rng.standard_normal((5, 5, 5)) * (rng.random((5, 5, 5)) < 0.4)
        s = sparsify(DenseTensor(data), SparsifyConfig(1.0, 0))
        assert s.nnz == np.count_nonzero(data)

    def test_deterministic_and_seed_sensitive(self, rng):
        t = random_tensor(rng, (10, 10, 10))
        a = sparsify(t, SparsifyConfig(0.3, 5))
        b = sparsify(t, SparsifyConfig(0.3, 5))
        c = sparsify(t, SparsifyConfig(0.3, 6))
        assert np.array_equal(a.linear, b.linear) and np.array_equal(a.values, b.values)
        assert not np.array_equal(a.linear, c.linear)

    def test_sparse_input_same_as_dense(self, rng):
        data = rng.standard_normal((6, 7, 8)) * (rng.random((6, 7, 8)) < 0.5)
        t = DenseTensor(data)
        cfg = SparsifyConfig(0.2, 99)
        a, b = sparsify(t, cfg), sparsify(sparsify_exact(t), cfg)
        assert np.array_equal(a.linear, b.linear) and np.array_equal(a.values, b.values)

    def test_stream_order_independent(self, rng):
        t = random_tensor(rng, (4, 5, 6))
        cfg = SparsifyConfig(0.3, 42)
        offline = sparsify(t, cfg)
        entries = [(idx, t.data[idx]) for idx in np.ndindex(*t.dims)]
        order = rng.permutation(len(entries))
        kept = dict(sparsify_stream(t.dims, [entries[i] for i in order], cfg))
        online = {tuple(i): v for i, v in zip(offline.indices.tolist(), offline.values.tolist())}
        assert kept == online

    def test_uniforms_are_random_access(self):
        full = entry_uniforms(7, np.arange(1000))
        assert np.array_equal(entry_uniforms(7, [500, 3]), full[[500, 3]])
        assert np.all((full >= 0) & (full < 1))
        assert stats.kstest(entry_uniforms(1, np.arange(20000)), "uniform").pvalue > 1e-3

    def test_unbiased_monte_carlo(self, rng):
        t = random_tensor(rng, (5, 5, 5))
        p, seeds = 0.3, 2000
        total = np.zeros(t.size)
        for seed in range(seeds):
            s = sparsify(t, SparsifyConfig(p, seed))
            total[s.linear] += s.values
        mean = total / seeds
        stderr = np.abs(t.values) * math.sqrt((1 - p) / p) / math.sqrt(seeds)
        z = (mean - t.values) / stderr
        # 125 independent 3-sigma checks: a few misses are expected by chance,
        # so bound the miss count and test the z-scores jointly.
        miss_rate = 2 * stats.norm.sf(3)
        assert np.sum(np.abs(z) > 3) <= stats.binom.ppf(0.9999, t.size, miss_rate)
        assert stats.chi2.sf(np.sum(z**2), t.size) > 1e-4
        assert abs(z.mean()) < 4 / math.sqrt(t.size)

    def test_nnz_binomial_interval(self):
        t = DenseTensor(np.ones((20, 20, 20)))
        lo, hi = stats.binom.interval(0.9999, 8000, 0.1)
        for seed in range(100):
            assert lo <= sparsify(t, SparsifyConfig(0.1, seed)).nnz <= hi

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
    def test_bad_probability(self, p):
        with pytest.raises(ArgumentError):
            SparsifyConfig(p)


class TestPipelines:
    def test_mach_hosvd_p_one_bitwise(self, rng):
        t = random_tensor(rng, (6, 7, 8))
        model, xhat = mach_hosvd(t, (2, 3, 2), SparsifyConfig(1.0, 9))
        assert models_identical(model, hosvd(t, (2, 3, 2)))
        assert xhat.nnz == t.size

    def test_mach_hooi_p_one_bitwise(self, rng):
        t = random_tensor(rng, (6, 7, 8))
        cfg = HooiConfig(20, 1e-6)
        model, _ = mach_hooi(t, (2, 2, 2), SparsifyConfig(1.0, 9), cfg)
        reference = hooi(t, (2, 2, 2), cfg)
        assert models_identical(model, reference)
        assert model.iterations == reference.iterations

    def test_returns_sampled_tensor(self, rng):
        t = random_tensor(rng, (6, 7, 8))
        cfg = SparsifyConfig(0.2, 4)
        _, xhat = mach_hosvd(t, (2, 2, 2), cfg)
        ref = sparsify(t, cfg)
        assert np.array_equal(xhat.linear, ref.linear)

    def test_accuracy_grows_with_p(self):
        t = synth_cauchy_tensor(40)
        means = []
        for p in (0.05, 0.1, 0.3, 1.0):
            accs = [
                accuracy(t, mach_hooi(t, (4, 4, 4), SparsifyConfig(p, s))[0])
                for s in range(10)
            ]
            means.append(np.mean(accs))
        assert all(b > a for a, b in zip(means, means[1:]))


class TestMinSamplingProbability:
    def test_cube_200(self):
        expected = (8 * math.log(200.0 * 200.0)) ** 4 / (200.0 * 200.0)
        value = min_sampling_probability((200, 200, 200))
        assert value == pytest.approx(expected, rel=1e-12)
        assert value > 1

    def test_symmetric_dims(self):
        dims = (90, 90, 90)
        single = (8 * 2 * math.log(90)) ** 4 / 90**2
        assert min_sampling_probability(dims) == pytest.approx(single, rel=1e-12)

    def test_max_over_modes(self):
        dims = (50, 300, 1000)
        terms = []
        for j in range(3):
            others = [dims[k] for k in range(3) if k != j]
            terms.append((8 * sum(math.log(i) for i in others)) ** 4 / math.prod(others))
        assert min_sampling_probability(dims) == pytest.approx(max(terms), rel=1e-12)

    def test_monotone_for_large_dims(self):
        # once (8 log)^4 grows slower than the product, a bigger mode shrinks the terms
        values = [min_sampling_probability((10**6, n, n)) for n in (10**6, 2 * 10**6, 4 * 10**6)]
        assert values[0] > values[1] > values[2]


class TestAchlioptas:
    def test_zero_b(self):
        assert achlioptas_bounds(0.0, 100, 4, 0.1) == (0.0, 0.0)

    def test_rank_one_equal(self):
        two, fro = achlioptas_bounds(2.5, 50, 1, 0.3)
        assert two == fro

    def test_hand_values(self):
        two, fro = achlioptas_bounds(1.0, 100, 4, 0.1)
        assert two == pytest.approx(4 * math.sqrt(1000), rel=1e-12)
        assert fro == pytest.approx(4 * math.sqrt(4000), rel=1e-12)

    def test_bad_arguments(self):
        with pytest.raises(ArgumentError):
            achlioptas_bounds(1.0, 10, 0, 0.5)


class TestErrorBound:
    def test_matches_independent_evaluation(self, rng):
        x = random_tensor(rng, (6, 7, 8))
        cfg = SparsifyConfig(0.4, 1)
        xhat = sparsify(x, cfg)
        report = theorem1_bound(x, xhat, (2, 3, 2), 0.4)
        expected = bound_oracle(x.data, densify(xhat).data, (2, 3, 2), 0.4)
        for rec, ti in zip(report.per_mode, expected):
            assert rec.t == pytest.approx(ti, rel=1e-12)
        assert report.t == min(rec.t for rec in report.per_mode)

    def test_full_rank_identity_sample(self, rng):
        x = random_tensor(rng, (4, 5, 6))
        report = theorem1_bound(x, sparsify(x, SparsifyConfig(1.0)), x.dims, 1.0)
        scale = tensor_norm(x)
        for rec in report.per_mode:
            assert rec.residual_x < 1e-10 * scale
            assert rec.residual_xhat < 1e-10 * scale
            assert rec.t > 0
        assert report.t > 0

    def test_halving_p_scales_b_terms(self, rng):
        x = random_tensor(rng, (5, 6, 7))
        xhat = sparsify(x, SparsifyConfig(0.5, 2))
        full = theorem1_bound(x, xhat, (2, 2, 2), 0.5)
        half = theorem1_bound(x, xhat, (2, 2, 2), 0.25)
        for a, b in zip(full.per_mode, half.per_mode):
            assert b.sampling_term / a.sampling_term == pytest.approx(math.sqrt(2), rel=1e-12)
            assert b.cross_term / a.cross_term == pytest.approx(2**0.25, rel=1e-12)

    def test_b_is_max_of_original(self, rng):
        x = random_tensor(rng, (4, 4, 4))
        xhat = sparsify(x, SparsifyConfig(0.2, 0))
        assert theorem1_bound(x, xhat, (1, 1, 1), 0.2).b == np.abs(x.data).max()

    def test_success_probability_formula(self):
        dims = (80, 90, 100)
        expected = 1.0
        for i in range(3):
            s = sum(math.log(dims[k]) for k in range(3) if k != i)
            expected *= 1 - math.exp(-19 * s)
        assert success_probability(dims) == pytest.approx(expected, rel=1e-12)

    def test_conditions_flags(self, rng):
        x = random_tensor(rng, (4, 4, 4))
        report = theorem1_bound(x, sparsify(x, SparsifyConfig(0.5)), (1, 1, 1), 0.5)
        assert not report.conditions_met
        assert report.conditions["squared_dimension_le_size"]
        assert not report.conditions["min_dimension_ge_76"]
        text = report.to_text()
        assert "conditions_met = false" in text
        assert "mode_3.t = " in text

    def test_shape_mismatch(self, rng):
        from machtensor import ShapeError

        with pytest.raises(ShapeError):
            theorem1_bound(random_tensor(rng, (3, 3)), sparsify_exact(random_tensor(rng, (3, 4))), (1, 1), 0.5)

    @pytest.mark.slow
    def test_bound_holds_observationally(self):
        rng = np.random.default_rng(80)
        x = DenseTensor(rng.random((80, 80, 80)))
        held = 0
        for seed in range(100):
            model, xhat = mach_hosvd(x, (4, 4, 4), SparsifyConfig(0.1, seed))
            error = tensor_norm(DenseTensor(x.data - reconstruct(model).data))
            held += error <= theorem1_bound(x, xhat, (4, 4, 4), 0.1).t
        assert held >= 95
