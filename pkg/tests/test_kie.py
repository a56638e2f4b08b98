"""Tests for the product-Gaussian kernel baseline."""

import math

import numpy as np
import pytest

from intensor.kie import KernelModel, kie_evaluate, kie_fit, scott_bandwidth
from intensor.simulate import PointPattern, substream


def _pattern(rows):
    rows = np.asarray(rows, dtype=float)
    return PointPattern(rows, rows.shape[1])


class TestScottBandwidth:
    def test_frozen_value_for_unit_quarter_sd(self):
        # Affinely rescale so each coordinate has sample sd exactly 0.25;
        # with 10000 pooled points in two dimensions the rule gives
        # 0.25 * 10000**(-1/6).
        rng = substream(11, 0)
        z = rng.uniform(0.3, 0.7, size=(10_000, 2))
        z = 0.5 + (z - z.mean(axis=0)) * (0.25 / z.std(axis=0, ddof=1))
        h = scott_bandwidth([_pattern(z)])
        np.testing.assert_allclose(h, 0.0538608672507971, rtol=1e-12)

    def test_pools_points_across_patterns(self):
        rng = substream(12, 0)
        pts = rng.uniform(0.1, 0.9, size=(60, 3))
        whole = scott_bandwidth([_pattern(pts)])
        halves = scott_bandwidth([_pattern(pts[:25]), _pattern(pts[25:])])
        np.testing.assert_allclose(halves, whole, rtol=1e-12)

    def test_per_coordinate_spread(self):
        rng = substream(13, 0)
        n = 4000
        pts = np.column_stack(
            [rng.uniform(0.45, 0.55, size=n), rng.uniform(0.0, 1.0, size=n)]
        )
        h = scott_bandwidth([_pattern(pts)])
        sd = pts.std(axis=0, ddof=1)
        np.testing.assert_allclose(h, sd * n ** (-1.0 / 6.0), rtol=1e-12)
        assert h[0] < h[1]

    def test_zero_variance_coordinate_gets_floor_and_warning(self):
        pts = np.column_stack([np.full(5, 0.5), np.linspace(0.1, 0.9, 5)])
        with pytest.warns(UserWarning, match="constant"):
            h = scott_bandwidth([_pattern(pts)])
        assert h[0] == pytest.approx(1e-3)
        assert h[1] > 1e-2

    def test_all_empty_is_an_error(self):
        empty = _pattern(np.empty((0, 2)))
        with pytest.raises(ValueError):
            scott_bandwidth([empty, empty])


class TestEvaluate:
    def test_matches_explicit_double_loop(self):
        model = KernelModel(
            points=np.array([[0.2], [0.6], [0.4]]),
            bandwidth=np.array([0.1]),
            n=2,
        )
        x = np.array([[0.3], [0.5], [0.05]])
        got = kie_evaluate(model, x)
        for k, xk in enumerate(x[:, 0]):
            want = sum(
                math.exp(-((xk - u) ** 2) / 0.02) / (0.1 * math.sqrt(2 * math.pi))
                for u in model.points[:, 0]
            ) / 2.0
            assert got[k] == pytest.approx(want, rel=1e-12)

    def test_product_kernel_in_two_dimensions(self):
        model = KernelModel(
            points=np.array([[0.3, 0.7], [0.6, 0.2]]),
            bandwidth=np.array([0.2, 0.05]),
            n=3,
        )
        x = np.array([[0.5, 0.5], [0.0, 1.0]])
        got = kie_evaluate(model, x)
        want = np.zeros(2)
        for k in range(2):
            for u in model.points:
                term = 1.0
                for d in range(2):
                    h = model.bandwidth[d]
                    term *= math.exp(
                        -((x[k, d] - u[d]) ** 2) / (2 * h * h)
                    ) / (h * math.sqrt(2 * math.pi))
                want[k] += term / 3.0
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_model_is_callable(self):
        model = KernelModel(
            points=np.array([[0.2, 0.8]]), bandwidth=np.array([0.1, 0.1]), n=1
        )
        x = np.array([[0.25, 0.75], [0.9, 0.1]])
        np.testing.assert_array_equal(model(x), kie_evaluate(model, x))

    def test_chunking_does_not_change_values(self):
        rng = substream(14, 0)
        model = KernelModel(
            points=rng.uniform(size=(400, 2)), bandwidth=np.array([0.08, 0.12]), n=5
        )
        x = rng.uniform(size=(300, 2))
        whole = kie_evaluate(model, x)
        pieces = np.concatenate([kie_evaluate(model, x[:113]), kie_evaluate(model, x[113:])])
        np.testing.assert_allclose(pieces, whole, rtol=1e-12)
        assert whole.shape == (300,)
        assert np.all(whole >= 0)

    def test_dimension_mismatch_raises(self):
        model = KernelModel(
            points=np.array([[0.5, 0.5]]), bandwidth=np.array([0.1, 0.1]), n=1
        )
        with pytest.raises(ValueError):
            kie_evaluate(model, np.array([[0.5, 0.5, 0.5]]))


class TestFit:
    def test_fit_pools_and_counts_patterns(self):
        rng = substream(15, 0)
        pats = [_pattern(rng.uniform(size=(8, 2))) for _ in range(4)]
        model = kie_fit(pats)
        assert model.n == 4
        assert model.points.shape == (32, 2)
        np.testing.assert_allclose(model.bandwidth, scott_bandwidth(pats))

    def test_empty_patterns_are_tolerated_when_pooling(self):
        rng = substream(16, 0)
        pats = [_pattern(rng.uniform(size=(10, 2))), _pattern(np.empty((0, 2)))]
        model = kie_fit(pats)
        assert model.points.shape == (10, 2)
        assert model.n == 2

    def test_all_empty_raises(self):
        with pytest.raises(ValueError):
            kie_fit([_pattern(np.empty((0, 2)))])

    def test_explicit_bandwidth_overrides_rule(self):
        rng = substream(17, 0)
        pats = [_pattern(rng.uniform(size=(20, 2)))]
        model = kie_fit(pats, bandwidth=[0.3, 0.4])
        np.testing.assert_array_equal(model.bandwidth, [0.3, 0.4])

    def test_average_over_patterns_scales_like_intensity(self):
        # Doubling the replication count with the same pooled cloud halves
        # the estimate: the kernel sum is averaged per pattern.
        rng = substream(18, 0)
        pts = rng.uniform(size=(50, 2))
        one = kie_fit([_pattern(pts)])
        two = kie_fit([_pattern(pts[:25]), _pattern(pts[25:])])
        x = rng.uniform(size=(7, 2))
        np.testing.assert_allclose(kie_evaluate(two, x) * 2, kie_evaluate(one, x), rtol=1e-12)

    def test_recovers_constant_intensity_level(self):
        # 200 unit-rate-30 uniform patterns; away from the boundary the
        # kernel average should sit near 30.
        rng = substream(19, 0)
        pats = []
        for _ in range(200):
            cnt = rng.poisson(30.0)
            pats.append(_pattern(rng.uniform(size=(cnt, 2))))
        model = kie_fit(pats)
        x = np.array([[0.5, 0.5], [0.4, 0.6], [0.6, 0.35]])
        est = kie_evaluate(model, x)
        np.testing.assert_allclose(est, 30.0, rtol=0.15)
