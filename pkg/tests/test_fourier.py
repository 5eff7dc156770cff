from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from incinterp.fourier import build_matrices, fourier_coefficients, grid_coefficients
from incinterp.spectral import midpoint_grid

from models import golden_model

F_GOLDEN = [[5, 2, 0], [2, 5, 2], [0, 2, 5]]


def test_golden_matrix_is_exact():
    mats = build_matrices(golden_model())
    assert mats.exact
    rows = mats.P.exact_rows()
    assert rows == [[Fraction(x, 4) for x in r] for r in F_GOLDEN]
    assert mats.T.is_zero and mats.Q.is_zero


@pytest.mark.parametrize("k", [0, 1, 3, 7])
def test_grid_coefficients_of_cosines(k):
    lam = midpoint_grid(64)
    c = grid_coefficients(np.cos(k * lam), 8)
    expected = np.zeros(17)
    if k == 0:
        expected[8] = 1
    else:
        expected[8 + k] = expected[8 - k] = 0.5
    assert np.allclose(c, expected, atol=1e-14)


@settings(max_examples=20)
@given(st.floats(-0.8, 0.8))
def test_ar1_reciprocal_coefficients(phi):
    # 1/|1 + phi z|^2 = sum (-phi)^|k| / (1 - phi^2)
    w = lambda lam: 1.0 / np.abs(1 + phi * np.exp(-1j * lam)) ** 2
    c = fourier_coefficients(w, 5, tol=1e-13)
    k = np.arange(-5, 6)
    assert np.allclose(c.real, (-phi) ** np.abs(k) / (1 - phi**2), atol=1e-11)
    assert np.max(np.abs(c.imag)) < 1e-12


def test_grid_too_small_rejected():
    with pytest.raises(ValueError):
        grid_coefficients(np.ones(8), 4)
