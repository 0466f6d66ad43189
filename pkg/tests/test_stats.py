import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid
from scipy.stats import norm

from squeezega.stats import generation_stats, kde, silverman_bandwidth


def test_single_sample_is_kernel():
    grid = np.linspace(-4, 4, 81)
    est = kde([0.0], bandwidth=1.0, grid=grid)
    np.testing.assert_allclose(est.density, norm.pdf(grid), atol=1e-15)


def test_symmetric_pair():
    grid = np.linspace(-3, 3, 61)
    est = kde([-0.7, 0.7], bandwidth=0.4, grid=grid)
    np.testing.assert_allclose(est.density, est.density[::-1], atol=1e-12)


def test_empty_samples():
    with pytest.raises(ValueError):
        kde([])
    with pytest.raises(ValueError):
        kde([1.0], bandwidth=0.0)


def test_standard_normal_recovery():
    x = np.random.default_rng(123).standard_normal(10_000)
    grid = np.linspace(-4, 4, 801)
    est = kde(x, "auto", grid)
    assert est.bandwidth == pytest.approx(silverman_bandwidth(x))
    assert np.max(np.abs(est.density - norm.pdf(grid))) < 0.02


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=40))
def test_unit_integral_and_permutation(samples):
    est = kde(samples)
    assert np.all(est.density >= 0)
    assert trapezoid(est.density, est.grid) == pytest.approx(1.0, abs=1e-3)
    shuffled = kde(samples[::-1], est.bandwidth, est.grid)
    assert np.array_equal(shuffled.density, est.density)


def test_generation_stats_examples():
    s = generation_stats([1, 2, 3])
    assert s.mean == 2 and s.median == 2
    assert generation_stats([1, 2, 3, 4]).median == 2.5
    c = generation_stats([0.7] * 5)
    assert c.mean == c.median == c.q25 == c.q75 == c.min == c.max == pytest.approx(0.7)
    with pytest.raises(ValueError):
        generation_stats([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
def test_summary_bounds(values):
    s = generation_stats(values)
    assert s.min <= s.median <= s.max
    assert s.min - 1e-6 <= s.mean <= s.max + 1e-6
