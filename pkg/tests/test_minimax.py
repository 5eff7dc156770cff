import numpy as np
import pytest

from incinterp import (
    DensityClass,
    FunctionalSpec,
    MinimaxOptions,
    RationalDensity,
    delta_under,
    least_favorable,
    least_favorable_cointegrated,
    verify_saddle,
)
from incinterp.errors import InfeasibleClassError, ValidationError
from incinterp.minimax import perturbed_pair
from incinterp.spectral import ZERO, CompositeDensity

from models import GOLDEN_F, GOLDEN_FUNC, GOLDEN_SPEC

G1 = RationalDensity.ar([0.3], scale=0.2)
TOL = 1e-6


def _pieces(pair):
    """Grid quantities recomputed from scratch: s, e, a, C."""
    spec, lam = pair.spec, pair.f0.grid
    z = np.exp(1j * lam)
    s = lam ** (2 * spec.n)
    e = np.abs(1 - z**spec.mu) ** spec.n
    a = sum(float(x) * z**k for k, x in enumerate(pair.func.a)) * (1 - z**spec.mu) ** spec.n
    C = sum(float(x) * z**k for k, x in enumerate(pair.robust_solution.c))
    return lam, s, e, a, C


def _delta_direct(pair, f, g):
    lam, s, e, a, C = _pieces(pair)
    f0, g0 = pair.f0.values, pair.g0.values
    p0 = f0 + s * g0
    hg = np.abs(a * f0 - s * C) / (e * p0)
    hf = np.abs(lam) ** pair.spec.n * np.abs(a * g0 + C) / (e * p0)
    return float(np.mean(hg**2 * g + hf**2 * f))


@pytest.fixture(scope="module")
def eps_both():
    return least_favorable(DensityClass.eps_neighborhood(GOLDEN_F, G1, eps1=0.1, eps2=0.1), GOLDEN_SPEC, GOLDEN_FUNC)


@pytest.fixture(scope="module")
def eps_f_known():
    return least_favorable(DensityClass.eps_neighborhood(GOLDEN_F, G1, eps2=0.1), GOLDEN_SPEC, GOLDEN_FUNC)


@pytest.fixture(scope="module")
def lower_f_known():
    return least_favorable(DensityClass.lower_reciprocal(P2=1.0, f=GOLDEN_F), GOLDEN_SPEC, GOLDEN_FUNC)


@pytest.mark.parametrize("which", ["eps_both", "eps_f_known"])
def test_eps_pairs_converge_and_pass_saddle(which, request):
    pair = request.getfixturevalue(which)
    assert pair.converged
    assert pair.max_residual < TOL
    rep = verify_saddle(pair, samples=50, seed=1)
    assert rep.passed, rep


def test_eps_known_f_closed_form(eps_f_known):
    pair = eps_f_known
    lam, s, e, a, C = _pieces(pair)
    f = pair.f0.values
    u = np.abs(a * f - s * C) / e
    f2 = u / np.sqrt(pair.alpha2) - f
    expected = np.maximum(G1(lam), f2 / s)
    assert np.max(np.abs(pair.g0.values - expected)) < TOL * np.max(expected)


def test_gamma_bounded_and_signed(eps_both):
    pair = eps_both
    assert np.all(np.abs(pair.gamma) <= 1 + TOL)
    moved = pair.g0.values > G1(pair.f0.grid) + 1e-8
    assert np.all(np.abs(pair.gamma[moved] - 1) < TOL)


def test_eps_constraints_active(eps_both):
    lam = eps_both.f0.grid
    assert np.mean((eps_both.f0.values - GOLDEN_F(lam)) ** 2) == pytest.approx(0.1, rel=TOL)
    assert np.mean(np.abs(eps_both.g0.values - G1(lam))) == pytest.approx(0.1, rel=TOL)


def test_lower_known_f_closed_form(lower_f_known):
    pair = lower_f_known
    assert pair.max_residual < TOL
    lam, s, e, a, C = _pieces(pair)
    f = pair.f0.values
    bracket = np.abs(a * f - s * C) / (pair.alpha2 * e) - s
    expected = f / bracket
    assert np.all(bracket > 0)
    assert np.max(np.abs(pair.g0.values - expected) / expected) < TOL
    # complementary slackness: the constraint is active with a positive multiplier
    assert pair.alpha2 > 0
    assert np.mean(1 / pair.g0.values) == pytest.approx(1.0, rel=TOL)


def test_delta_under_at_pair_is_robust_error(eps_both):
    assert delta_under(eps_both, eps_both.f0, eps_both.g0) == pytest.approx(eps_both.robust_solution.mse, abs=1e-6)


def test_delta_under_matches_direct_quadrature(eps_both):
    from incinterp.spectral import GridDensity

    g = GridDensity(1.1 * eps_both.g0.values)
    assert delta_under(eps_both, eps_both.f0, g) == pytest.approx(
        _delta_direct(eps_both, eps_both.f0.values, g.values), rel=1e-12
    )


def test_zero_functional_is_trivial():
    pair = least_favorable(DensityClass.eps_neighborhood(GOLDEN_F, G1, eps1=0.1), GOLDEN_SPEC, FunctionalSpec([0, 0]))
    assert pair.converged and pair.objective == 0
    assert delta_under(pair, pair.f0, pair.g0) == 0


def test_saddle_with_no_samples_is_vacuous(eps_both):
    rep = verify_saddle(eps_both, samples=0)
    assert rep.passed and rep.samples == 0


def test_broken_multiplier_is_caught(eps_both):
    broken = perturbed_pair(eps_both, alpha2=eps_both.alpha2 * 3)
    assert not broken.converged
    rep = verify_saddle(broken, samples=30, seed=0)
    assert rep.violations > 0 or not rep.membership_ok or broken.max_residual > TOL


def test_saddle_is_deterministic(eps_f_known):
    a = verify_saddle(eps_f_known, samples=10, seed=3)
    b = verify_saddle(eps_f_known, samples=10, seed=3)
    assert a == b


def test_cointegrated_beta_one_literal_equals_rescaled():
    p1 = CompositeDensity(((1, 0, GOLDEN_F), (1, 1, G1)))
    cls = DensityClass.eps_neighborhood(GOLDEN_F, p1, eps1=0.1, eps2=0.1, beta=1.0)
    a = least_favorable_cointegrated(cls, GOLDEN_SPEC, GOLDEN_FUNC)
    b = least_favorable_cointegrated(cls, GOLDEN_SPEC, GOLDEN_FUNC, MinimaxOptions(rescale=True))
    assert a.converged and b.converged
    assert np.allclose(a.f0.values, b.f0.values, rtol=1e-8)
    assert np.allclose(a.g0.values, b.g0.values, rtol=1e-8)
    assert verify_saddle(a, samples=30).passed


def test_cointegrated_lower_class_infeasible():
    p1 = CompositeDensity(((4, 0, GOLDEN_F), (1, 1, G1)))
    cls = DensityClass.lower_reciprocal(P1=1.0, g=p1, beta=2.0)
    with pytest.raises(InfeasibleClassError):
        least_favorable_cointegrated(cls, GOLDEN_SPEC, GOLDEN_FUNC)


@pytest.mark.parametrize("kwargs", [dict(grid=256), dict(theta=0.0), dict(max_iter=0)])
def test_options_validated(kwargs):
    with pytest.raises(ValidationError):
        MinimaxOptions(**kwargs)


@pytest.mark.parametrize("make", [
    lambda: DensityClass.lower_reciprocal(f=GOLDEN_F, g=G1),
    lambda: DensityClass.eps_neighborhood(GOLDEN_F, G1, eps1=-1),
    lambda: DensityClass.lower_reciprocal(P1=1.0, P2=1.0, beta=2.0),
    lambda: DensityClass("box", GOLDEN_F, ZERO, eps1=1.0),
])
def test_class_validation(make):
    with pytest.raises(ValidationError):
        make()


def test_cointegrated_eps_objective_grows_with_grid():
    """Nothing in the class keeps (p - beta^2 f) / lam^2 integrable, so the grid
    optimum piles up at the origin and the objective grows under refinement."""
    p1 = CompositeDensity(((1, 0, GOLDEN_F), (1, 1, G1)))
    cls = DensityClass.eps_neighborhood(GOLDEN_F, p1, eps1=0.1, eps2=0.1, beta=1.0)
    coarse, fine = (least_favorable_cointegrated(cls, GOLDEN_SPEC, GOLDEN_FUNC, MinimaxOptions(grid=M)) for M in (512, 1024))
    assert fine.objective > 2 * coarse.objective
    assert fine.bounded["remainder_peak_ratio"] > 1e6
