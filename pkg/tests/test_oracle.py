import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from incinterp import FunctionalSpec, increment_weights, project, solve
from incinterp.errors import IndefiniteMatrixError, NumericalError
from incinterp.oracle import _check_gram, _normal_solve, covariances

from models import GOLDEN_FUNC, golden_model, random_model


def test_golden_covariances():
    cov = covariances(golden_model(), 6)
    m = np.arange(-6, 7)
    assert np.allclose(cov.inc, (4 / 3) * (-0.5) ** np.abs(m), atol=1e-12)
    assert not np.any(cov.noise)


def test_golden_projection():
    res = project(golden_model(), GOLDEN_FUNC, K=10)
    assert res.mse == pytest.approx(616 / 85, abs=1e-10)
    assert res.weights[-1] == pytest.approx(-106 / 85, abs=1e-12)
    assert res.weights[3] == pytest.approx(-4 / 85, abs=1e-12)
    others = [abs(v) for k, v in res.weights.items() if k not in (-1, 3)]
    assert max(others) < 1e-12
    tw = res.time_weights(golden_model().spec)
    for t, v in {-2: 106 / 85, -1: 149 / 85, 2: 4 / 85, 3: -4 / 85}.items():
        assert tw[t] == pytest.approx(v, abs=1e-12)


def test_zero_functional_projects_to_zero():
    res = project(golden_model(), FunctionalSpec([0, 0]), K=5)
    assert res.mse == 0
    assert all(v == 0 for v in res.weights.values())


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mse_nonincreasing_in_window(seed):
    model, func = random_model(np.random.default_rng(seed))
    errs = [project(model, func, K=K).mse for K in (2, 5, 10, 20)]
    assert all(a >= b - 1e-10 for a, b in zip(errs, errs[1:]))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_covariance_tables_even_and_dominated(seed):
    model, _ = random_model(np.random.default_rng(seed))
    cov = covariances(model, 10)
    assert np.allclose(cov.inc, cov.inc[::-1], atol=1e-12)
    assert np.all(np.abs(cov.inc) <= cov.inc[10] + 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_agrees_with_solver(seed):
    model, func = random_model(np.random.default_rng(seed))
    sol = solve(model, func)
    w = increment_weights(sol, K=50)
    orc = project(model, func, K=50)
    assert orc.mse == pytest.approx(sol.mse, abs=1e-6)
    assert max(abs(w[k] - v) for k, v in orc.weights.items()) < 1e-6


def test_indefinite_gram_rejected():
    with pytest.raises(IndefiniteMatrixError):
        _check_gram(np.array([[1.0, 2.0], [2.0, 1.0]]), "test")


def test_singular_gram_reports_rank():
    G = np.ones((3, 3))
    with pytest.raises(NumericalError, match="effective rank 1 of 3"):
        _normal_solve(G, np.ones(3))
