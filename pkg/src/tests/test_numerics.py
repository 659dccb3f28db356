import math

import numpy as np
import pytest
from scipy import stats

from skfeedback.core.numerics import from_db, mod_reduce, qfunc, qfunc_inv, to_db
from skfeedback.errors import DomainError


class TestQFunction:
    def test_known_values(self):
        assert qfunc(0.0) == 0.5
        assert qfunc(1.2815515655446004) == pytest.approx(0.1, rel=1e-10)
        assert 0.0 <= qfunc(40.0) < 1e-300

    def test_symmetry(self):
        x = np.linspace(-6.0, 6.0, 121)
        np.testing.assert_allclose(qfunc(x) + qfunc(-x), 1.0, rtol=1e-14)

    def test_array_in_array_out(self):
        out = qfunc(np.array([0.0, 0.0]))
        assert isinstance(out, np.ndarray)
        assert isinstance(qfunc(1.0), float)

    def test_non_finite_argument(self):
        with pytest.raises(DomainError):
            qfunc(math.inf)
        with pytest.raises(DomainError):
            qfunc(np.array([0.0, math.nan]))

    @pytest.mark.parametrize("p", [1e-12, 1e-8, 2.5e-8, 1e-6, 1e-3, 0.1, 0.3, 0.7, 0.9, 1.0 - 1e-6, 1.0 - 1e-12])
    def test_inverse_round_trip(self, p):
        assert qfunc(qfunc_inv(p)) == pytest.approx(p, rel=1e-10)

    def test_inverse_median(self):
        assert qfunc_inv(0.5) == pytest.approx(0.0, abs=1e-15)

    def test_inverse_upper_tail_is_mirrored(self):
        q = 1.0 - 1e-12
        assert qfunc_inv(q) == pytest.approx(-qfunc_inv(1.0 - q), rel=1e-4)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_inverse_domain(self, p):
        with pytest.raises(DomainError):
            qfunc_inv(p)


class TestDecibels:
    def test_conversions(self):
        assert to_db(100.0) == pytest.approx(20.0)
        assert from_db(3.0) == pytest.approx(1.9952623149688795)
        assert from_db(to_db(7.3)) == pytest.approx(7.3)
        assert to_db(math.inf) == math.inf

    def test_non_positive_power(self):
        with pytest.raises(DomainError):
            to_db(0.0)
        with pytest.raises(DomainError):
            to_db(-1.0)


class TestModReduce:
    def test_examples(self):
        assert mod_reduce(5.0, 4.0) == 1.0
        assert mod_reduce(1.0, 2.0) == -1.0
        assert mod_reduce(-1.0, 2.0) == -1.0
        assert mod_reduce(0.3, 2.0) == 0.3

    def test_half_interval_wraps_to_lower_edge(self):
        d = 3.0
        assert mod_reduce(0.5 * d, d) == -0.5 * d
        assert mod_reduce(-0.5 * d, d) == -0.5 * d

    def test_invalid_interval(self):
        with pytest.raises(DomainError):
            mod_reduce(1.0, 0.0)
        with pytest.raises(DomainError):
            mod_reduce(1.0, -2.0)
        with pytest.raises(DomainError):
            mod_reduce(math.nan, 2.0)

    def test_range_and_integer_shift(self):
        rng = np.random.default_rng(11)
        d = 3.7
        x = rng.uniform(-1000.0, 1000.0, size=100_000)
        r = mod_reduce(x, d)
        assert np.all(r >= -0.5 * d)
        assert np.all(r < 0.5 * d)
        shift = (x - r) / d
        np.testing.assert_allclose(shift, np.round(shift), atol=1e-9)

    def test_values_inside_interval_are_unchanged(self):
        rng = np.random.default_rng(12)
        d = 2.5
        x = rng.uniform(-0.5 * d, 0.5 * d, size=100_000)
        assert np.array_equal(mod_reduce(x, d), x)

    def test_reduction_is_compatible_with_addition(self):
        rng = np.random.default_rng(13)
        d = 1.9
        a = rng.normal(scale=20.0, size=100_000)
        b = rng.normal(scale=20.0, size=100_000)
        lhs = mod_reduce(mod_reduce(a, d) + b, d)
        rhs = mod_reduce(a + b, d)
        # compare on the circle so that edge wraps count as equal
        np.testing.assert_allclose(mod_reduce(lhs - rhs, d), 0.0, atol=1e-9)

    def test_aliasing_difference_is_multiple_of_interval(self):
        rng = np.random.default_rng(14)
        d = 2.0
        t = rng.normal(scale=5.0, size=100_000)
        outside = (t < -0.5 * d) | (t >= 0.5 * d)
        k = (mod_reduce(t, d) - t) / d
        np.testing.assert_allclose(k, np.round(k), atol=1e-9)
        assert np.all(np.round(k[outside]) != 0)
        assert np.all(np.round(k[~outside]) == 0)

    def test_dithered_output_is_uniform(self):
        rng = np.random.default_rng(15)
        d = math.sqrt(12.0 * 4.0)
        x = 3.3
        v = rng.uniform(-0.5 * d, 0.5 * d, size=100_000)
        r = mod_reduce(x + v, d)
        result = stats.kstest(r, "uniform", args=(-0.5 * d, d))
        assert result.pvalue > 0.01

    def test_dithered_output_power(self):
        rng = np.random.default_rng(16)
        p_fb = 4.0
        d = math.sqrt(12.0 * p_fb)
        x = rng.normal(scale=30.0, size=100_000)
        v = rng.uniform(-0.5 * d, 0.5 * d, size=x.shape)
        power = mod_reduce(x + v, d) ** 2
        se = power.std(ddof=1) / math.sqrt(power.size)
        assert abs(power.mean() - p_fb) <= 4.0 * se

    def test_shifted_reductions_recover_the_shift(self):
        rng = np.random.default_rng(17)
        d = 1.9
        x = rng.normal(scale=20.0, size=100_000)
        d1 = rng.uniform(-d, d, size=x.shape)
        d2 = rng.uniform(-d, d, size=x.shape)
        r = mod_reduce(mod_reduce(x + d1, d) + d2 - x, d)
        total = d1 + d2
        inside = np.abs(total) < 0.49 * d
        np.testing.assert_allclose(r[inside], total[inside], atol=1e-9)
        k = (total - r) / d
        np.testing.assert_allclose(k, np.round(k), atol=1e-9)
        outside = (np.abs(total) > 0.5 * d + 1e-6) & (np.abs(np.abs(total) - 1.5 * d) > 1e-6)
        assert np.all(np.round(k[outside]) != 0)
