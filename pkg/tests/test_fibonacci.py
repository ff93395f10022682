import numpy as np
import pytest

from r2g.errors import InvalidArgumentError
from r2g.geometry import fibonacci_hemisphere


def min_pairwise_angle(dirs):
    dots = np.clip(dirs @ dirs.T, -1.0, 1.0)
    np.fill_diagonal(dots, -1.0)
    return float(np.arccos(dots.max()))


def test_single_sample_matches_formula():
    out = fibonacci_hemisphere(1)
    assert out.shape == (1, 3)
    assert abs(out[0, 2] - 0.5) < 1e-12  # z = (0 + 0.5) / 1
    assert abs(np.linalg.norm(out[0]) - 1.0) < 1e-12


def test_41_views_upper_hemisphere_unit():
    out = fibonacci_hemisphere(41)
    assert out.shape == (41, 3)
    assert (out[:, 2] >= 0).all()
    assert np.abs(np.linalg.norm(out, axis=1) - 1.0).max() < 1e-12


def test_zero_rejected():
    with pytest.raises(InvalidArgumentError):
        fibonacci_hemisphere(0)


def test_deterministic_and_distinct():
    a = fibonacci_hemisphere(41)
    b = fibonacci_hemisphere(41)
    assert np.array_equal(a, b)
    d = np.linalg.norm(a[:, None] - a[None, :], axis=-1)
    np.fill_diagonal(d, 1.0)
    assert d.min() > 1e-6


def test_spacing_beats_uniform_random_baseline():
    """Brute-force O(n^2) minimum geodesic angle must beat the expected
    minimum of uniform-random hemisphere sampling."""
    fib = min_pairwise_angle(fibonacci_hemisphere(41))
    rng = np.random.default_rng(123)
    baseline = []
    for _ in range(200):
        v = rng.normal(size=(41, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        v[:, 2] = np.abs(v[:, 2])
        baseline.append(min_pairwise_angle(v))
    assert fib >= np.mean(baseline)
