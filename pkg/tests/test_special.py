import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from gmcloss.numgrad.special import erf, erf_grad


GRID = np.concatenate([np.linspace(-8, 8, 4001), [0.0, 1e-300, -1e-12, 2.9999, 3.0, 3.0001, 5.9999, 6.0]])


def test_erf_matches_mpmath_across_regimes():
    ref = np.array([float(mpmath.erf(mpmath.mpf(float(x)))) for x in GRID])
    assert np.max(np.abs(erf(GRID) - ref)) < 2e-15


def test_erf_matches_math_module():
    xs = np.linspace(-5, 5, 1001)
    assert np.max(np.abs(erf(xs) - np.vectorize(math.erf)(xs))) < 2e-15


@given(st.floats(-50, 50, allow_nan=False))
def test_erf_is_odd_and_bounded(x):
    assert erf(np.array([x]))[0] == -erf(np.array([-x]))[0]
    assert -1.0 <= erf(np.array([x]))[0] <= 1.0


def test_erf_saturates_and_scalar_input():
    assert erf(np.array([np.inf, -np.inf])).tolist() == [1.0, -1.0]
    assert float(erf(0.5)) == pytest.approx(math.erf(0.5), abs=2e-15)


def test_erf_rejects_nan():
    with pytest.raises(ValueError):
        erf(np.array([0.0, np.nan]))


def test_erf_grad_is_gaussian_density():
    xs = np.linspace(-4, 4, 81)
    assert np.allclose(erf_grad(xs), 2 / np.sqrt(np.pi) * np.exp(-xs ** 2), rtol=0, atol=1e-15)
    h = 1e-6
    fd = (erf(xs + h) - erf(xs - h)) / (2 * h)
    assert np.max(np.abs(fd - erf_grad(xs))) < 1e-8
