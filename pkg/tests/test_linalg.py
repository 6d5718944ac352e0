from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jmech.linalg import expm


# scipy's triangular fix-up loses the off-diagonal entry when a diagonal entry is
# around 1e-255, so tiny magnitudes are kept out of the oracle comparison
_entries = st.one_of(st.just(0.0), st.floats(1e-6, 20), st.floats(-20, -1e-6))


@given(arrays(np.float64, (4, 4), elements=_entries))
def test_matches_scipy(A):
    want = scipy.linalg.expm(A)
    assert np.allclose(expm(A), want, rtol=1e-10, atol=1e-10 * np.abs(want).max())


def test_complex_rotation_generator():
    theta = 0.7
    A = 1j * theta * np.array([[0, 1], [1, 0]])
    want = np.array([[np.cos(theta), 1j * np.sin(theta)], [1j * np.sin(theta), np.cos(theta)]])
    np.testing.assert_allclose(expm(A), want, atol=1e-15)


def test_tiny_diagonal_block():
    eps = 1e-255
    A = np.array([[5.0, 0.0, 0.0], [0.0, eps, 1.0], [0.0, 0.0, 0.0]])
    want = np.diag([np.exp(5.0), 1.0, 1.0])
    want[1, 2] = np.expm1(eps) / eps
    np.testing.assert_allclose(expm(A), want, rtol=1e-14)


def test_nilpotent_is_exact():
    A = np.array([[0.0, 3.0], [0.0, 0.0]])
    np.testing.assert_array_equal(expm(A), [[1.0, 3.0], [0.0, 1.0]])


def test_zero_and_empty():
    np.testing.assert_array_equal(expm(np.zeros((3, 3))), np.eye(3))
    assert expm(np.zeros((0, 0))).shape == (0, 0)


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros(3), np.array([[np.inf]])])
def test_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        expm(bad)
