import numpy as np
import pytest

from safeevop import DecisionSpace, ScaledPoint, scale_point, unscale_point
from safeevop.errors import DimensionMismatchError, OutOfBoundsError


def space_2d():
    return DecisionSpace(np.array([3.0, 70.0]), np.array([6.0, 100.0]))


class TestDecisionSpace:
    def test_rejects_equal_bounds(self):
        with pytest.raises(OutOfBoundsError):
            DecisionSpace(np.array([0.0, 1.0]), np.array([1.0, 1.0]))

    def test_rejects_inverted_bounds(self):
        with pytest.raises(OutOfBoundsError):
            DecisionSpace(np.array([2.0]), np.array([1.0]))

    def test_rejects_empty(self):
        with pytest.raises(DimensionMismatchError):
            DecisionSpace(np.array([]), np.array([]))

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(DimensionMismatchError):
            DecisionSpace(np.array([0.0]), np.array([1.0, 2.0]))


class TestScaledPoint:
    def test_rejects_out_of_range(self):
        with pytest.raises(OutOfBoundsError):
            ScaledPoint(np.array([0.5, 1.0 + 1e-9]))
        with pytest.raises(OutOfBoundsError):
            ScaledPoint(np.array([-1e-9]))

    def test_boundary_values_allowed(self):
        p = ScaledPoint(np.array([0.0, 1.0]))
        assert p.coords[0] == 0.0 and p.coords[1] == 1.0

    def test_coords_read_only(self):
        p = ScaledPoint(np.array([0.5]))
        with pytest.raises(ValueError):
            p.coords[0] = 0.9


class TestScaling:
    def test_lower_bound_maps_to_zero(self):
        s = space_2d()
        assert np.array_equal(scale_point(s, s.lower).coords, np.zeros(2))

    def test_upper_bound_maps_to_one(self):
        s = space_2d()
        assert np.array_equal(scale_point(s, s.upper).coords, np.ones(2))

    def test_hand_scaled_example(self):
        # (3.5 - 3) / 3 and (72 - 70) / 30, by hand
        p = scale_point(space_2d(), np.array([3.5, 72.0]))
        np.testing.assert_allclose(p.coords, [0.166667, 0.066667], atol=5e-7)

    def test_midpoint_unscales(self):
        u = unscale_point(space_2d(), ScaledPoint(np.array([0.5, 0.5])))
        np.testing.assert_array_equal(u, [4.5, 85.0])

    def test_out_of_bounds_raises_with_axis(self):
        with pytest.raises(OutOfBoundsError) as err:
            scale_point(space_2d(), np.array([3.5, 100.1]))
        assert err.value.axis == 1

    def test_slack_absorbs_tiny_excursions(self):
        p = scale_point(space_2d(), np.array([3.0 - 1e-13, 100.0 + 1e-13]))
        assert p.coords[0] == 0.0 and p.coords[1] == 1.0

    def test_round_trip_random_spaces(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 6))
            lo = rng.uniform(-100, 100, n)
            hi = lo + rng.uniform(1e-3, 100, n)
            space = DecisionSpace(lo, hi)
            u = rng.uniform(lo, hi)
            back = unscale_point(space, scale_point(space, u))
            np.testing.assert_allclose(back, u, rtol=1e-12, atol=1e-12)
