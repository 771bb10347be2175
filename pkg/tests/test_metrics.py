import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from flowsolve.core import InvalidArgumentError
from flowsolve.metrics import endpoint_error, energy_distance, fit_order, gaussian_w2, sample_w2


class TestEndpointError:
    def test_examples(self):
        assert endpoint_error([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert endpoint_error([3.0, 4.0], [0.0, 0.0], "l2") == 5.0
        assert endpoint_error([1.0, -2.0], [0.0, 0.0], "linf") == 2.0

    def test_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            endpoint_error([1.0], [1.0, 2.0])


class TestFitOrder:
    @pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
    def test_pure_power_law(self, p):
        ns = [10, 20, 40]
        res = fit_order(ns, [7.3 * (1 / n) ** p for n in ns])
        assert res.slope == pytest.approx(p, abs=1e-9)
        assert res.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_hand_log_ratio(self):
        res = fit_order([10, 20, 40], [1e-2, 2.5e-3, 6.25e-4])
        assert res.slope == pytest.approx(2.0, abs=1e-12)

    def test_floor_excluded_with_warning(self):
        with pytest.warns(RuntimeWarning):
            res = fit_order([10, 20, 40, 80], [1e-4, 1.25e-5, 1.5625e-6, 1e-16])
        assert res.excluded == (80,)
        assert res.slope == pytest.approx(3.0, abs=1e-9)

    def test_too_few_points(self):
        with pytest.raises(InvalidArgumentError):
            fit_order([10, 20], [1e-2, 1e-3])
        with pytest.warns(RuntimeWarning), pytest.raises(InvalidArgumentError):
            fit_order([10, 20, 40], [1e-2, 0.0, 1e-3])

    def test_counts_must_increase(self):
        with pytest.raises(InvalidArgumentError):
            fit_order([10, 10, 40], [1e-2, 1e-3, 1e-4])


class TestW2:
    def test_identical(self):
        C = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert gaussian_w2([1, 2], C, [1, 2], C) == pytest.approx(0.0, abs=1e-12)

    def test_mean_shift(self):
        assert gaussian_w2([0, 0], np.eye(2), [3, 4], np.eye(2)) == pytest.approx(25.0)

    def test_1d_closed_form(self):
        assert gaussian_w2([0.0], [[1.0]], [0.0], [[4.0]]) == pytest.approx(1.0)

    def test_commuting_closed_form(self):
        # diagonal covariances: sum (sqrt(a_i) - sqrt(b_i))^2
        a, b = np.array([1.0, 9.0, 0.25]), np.array([4.0, 1.0, 0.0])
        expected = np.sum((np.sqrt(a) - np.sqrt(b)) ** 2)
        assert gaussian_w2(np.zeros(3), np.diag(a), np.zeros(3), np.diag(b)) == pytest.approx(expected)

    def test_non_symmetric(self):
        with pytest.raises(InvalidArgumentError):
            gaussian_w2([0, 0], [[1, 0.5], [0, 1]], [0, 0], np.eye(2))

    @given(
        a=arrays(np.float64, (3, 3), elements=st.floats(-2, 2)),
        b=arrays(np.float64, (3, 3), elements=st.floats(-2, 2)),
        m=arrays(np.float64, (3,), elements=st.floats(-3, 3)),
    )
    @settings(max_examples=50, deadline=None)
    def test_symmetric_in_arguments(self, a, b, m):
        Ca, Cb = a @ a.T, b @ b.T
        w_ab = gaussian_w2(m, Ca, np.zeros(3), Cb)
        w_ba = gaussian_w2(np.zeros(3), Cb, m, Ca)
        assert w_ab >= 0
        assert w_ab == pytest.approx(w_ba, rel=1e-6, abs=1e-6)

    def test_sample_w2(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4000, 2))
        assert sample_w2(x, x) == pytest.approx(0.0, abs=1e-10)
        assert sample_w2(x, x + [3.0, 4.0]) == pytest.approx(25.0, abs=1e-9)


class TestEnergy:
    def test_identical(self):
        x = np.random.default_rng(1).normal(size=(50, 3))
        assert energy_distance(x, x) == 0.0
        assert energy_distance(x, np.concatenate([x, x])) == pytest.approx(0.0, abs=1e-12)

    def test_point_masses(self):
        assert energy_distance([[0.0, 0.0]], [[3.0, 4.0]]) == pytest.approx(10.0)

    def test_empty(self):
        with pytest.raises(InvalidArgumentError):
            energy_distance(np.zeros((0, 2)), np.zeros((3, 2)))

    @given(
        a=arrays(np.float64, (6, 2), elements=st.floats(-5, 5)),
        b=arrays(np.float64, (4, 2), elements=st.floats(-5, 5)),
    )
    @settings(max_examples=50, deadline=None)
    def test_non_negative(self, a, b):
        assert energy_distance(a, b) >= 0.0
