from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from incinterp import (
    FunctionalSpec,
    IncrementSpec,
    ObservationModel,
    ObservationSeries,
    RationalDensity,
    estimate,
    estimate_point,
    increment_weights,
    mse_integral,
    solve,
    solve_cointegrated,
    solve_noise_free,
    solve_point,
    spectral_characteristic,
    time_weights,
    transfer_function,
)
from incinterp.errors import MissingObservationError, ValidationError
from incinterp.interpolator import increment_kernel
from incinterp.spectral import CompositeDensity, GridDensity, midpoint_grid

from models import GOLDEN_F, GOLDEN_FUNC, GOLDEN_SPEC, golden_model, random_model

GOLDEN_SERIES = {-3: 0.4, -2: 1.0, -1: 1.5, 2: 2.5, 3: 2.0, 4: 2.6}


@pytest.fixture(scope="module")
def golden():
    return solve(golden_model(), GOLDEN_FUNC)


def test_golden_exact_solution(golden):
    assert golden.exact
    assert golden.c_exact == (Fraction(212, 85), Fraction(-4, 17), Fraction(8, 85))
    assert golden.mse_exact == Fraction(616, 85)


def test_golden_weights(golden):
    w = increment_weights(golden)
    assert w.exact
    assert w.weights == {-1: Fraction(-106, 85), 3: Fraction(-4, 85)}
    assert time_weights(golden, w) == {
        -2: Fraction(106, 85), -1: Fraction(149, 85), 2: Fraction(4, 85), 3: Fraction(-4, 85)
    }


def test_golden_estimate(golden):
    series = ObservationSeries(GOLDEN_SERIES)
    # (106*1.0 + 149*1.5 + 4*2.5 - 4*2.0) / 85
    assert estimate(golden, series) == pytest.approx(3.9, abs=1e-15)


def test_estimate_needs_observations(golden):
    with pytest.raises(MissingObservationError):
        estimate(golden, ObservationSeries({-1: 1.0, 2: 0.0}))
    with pytest.raises(ValidationError):
        estimate(golden, ObservationSeries({**GOLDEN_SERIES, 0: 1.0}))


def test_series_from_csv(tmp_path):
    path = tmp_path / "obs.csv"
    path.write_text("t,value\n" + "".join(f"{t},{v}\n" for t, v in GOLDEN_SERIES.items()))
    assert ObservationSeries.from_csv(path).values == GOLDEN_SERIES


# values confirmed by the time-domain projection at K=10
@pytest.mark.parametrize("p,mse", [(0, Fraction(84, 85)), (1, Fraction(104, 85))])
def test_golden_point(p, mse):
    sol = solve_point(golden_model(), p)
    assert sol.mse_exact == mse
    ref = solve(golden_model(), FunctionalSpec.unit(p, 1))
    assert np.allclose(sol.c, ref.c, atol=1e-14)


def test_point_estimate_value():
    value, mse = estimate_point(golden_model(), 0, ObservationSeries(GOLDEN_SERIES))
    sol = solve(golden_model(), FunctionalSpec([1, 0]))
    assert value == pytest.approx(estimate(sol, ObservationSeries(GOLDEN_SERIES)), abs=1e-14)
    assert mse == pytest.approx(84 / 85)


def test_mse_routes_agree_on_golden(golden):
    assert mse_integral(golden) == pytest.approx(616 / 85, rel=1e-12)


def test_zero_functional():
    sol = solve(golden_model(), FunctionalSpec([0, 0]))
    assert sol.mse == 0
    assert increment_weights(sol).weights == {}
    assert mse_integral(sol) == 0


def test_characteristic_is_kernel_times_transfer(golden):
    lam = midpoint_grid(64)
    h = spectral_characteristic(golden, lam)
    assert np.allclose(h, increment_kernel(lam, GOLDEN_SPEC) * transfer_function(golden, lam))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_noise_free_matches_solve(seed):
    model, func = random_model(np.random.default_rng(seed), noise=False)
    a, b = solve(model, func), solve_noise_free(model, func)
    assert np.allclose(a.c, b.c, rtol=1e-12, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mse_is_nonnegative_and_routes_agree(seed):
    model, func = random_model(np.random.default_rng(seed))
    sol = solve(model, func)
    assert sol.mse >= 0
    assert mse_integral(sol) == pytest.approx(sol.mse, rel=1e-8, abs=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.5, 3.0))
def test_rescaled_cointegration_matches_scaled_observation(seed, beta):
    """Observing beta*xi + eta and dividing by beta is the optimal estimate of xi."""
    rng = np.random.default_rng(seed)
    model, func = random_model(rng, noise=True)
    rem = model.g
    co = ObservationModel.cointegrated_from_remainder(model.spec, model.f, rem, beta)
    sol = solve_cointegrated(co, func, rescale=True)
    # same observation scaled by 1/beta: signal f, noise rem / beta^2
    scaled = ObservationModel.signal_plus_noise(model.spec, model.f, CompositeDensity(((1 / beta**2, 0, rem),)))
    ref = solve(scaled, func)
    assert sol.mse == pytest.approx(ref.mse, rel=1e-8)
    assert mse_integral(sol) == pytest.approx(sol.mse, rel=1e-8)


def test_literal_cointegration_at_beta_one_is_standard():
    rem = RationalDensity.ar([0.3], scale=0.2)
    co = ObservationModel.cointegrated_from_remainder(GOLDEN_SPEC, GOLDEN_F, rem, 1)
    std = ObservationModel.signal_plus_noise(GOLDEN_SPEC, GOLDEN_F, rem)
    a, b = solve_cointegrated(co, GOLDEN_FUNC), solve(std, GOLDEN_FUNC)
    assert np.allclose(a.c, b.c, atol=1e-12)
    assert a.mse == pytest.approx(b.mse, rel=1e-12)


def test_grid_tabulated_model_close_to_rational():
    f_grid = GridDensity.sample(GOLDEN_F, 4096)
    sol = solve(ObservationModel.noise_free(GOLDEN_SPEC, f_grid), GOLDEN_FUNC)
    assert sol.mse == pytest.approx(616 / 85, rel=1e-8)


def test_explicit_K_reports_tail():
    spec = IncrementSpec(1, 1, 0)
    f = RationalDensity.ar([0.9], n=1, mu=1)
    g = RationalDensity.ar([0.2], scale=0.5)
    sol = solve(ObservationModel.signal_plus_noise(spec, f, g), FunctionalSpec([1]))
    w = increment_weights(sol, K=3)
    assert w.K == 3 and w.tail > 1e-6
    assert set(w.weights) == {-3, -2, -1, 2, 3, 4}
