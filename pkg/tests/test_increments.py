from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from incinterp.increments import (
    FunctionalSpec,
    IncrementSpec,
    a_mu_coefficients,
    b_coefficients,
    coefficient_bundle,
    d_coefficients,
    d_matrix,
    signed_binomial,
    v_coefficients,
)

specs = st.builds(IncrementSpec, st.integers(1, 3), st.integers(1, 3), st.integers(0, 4))


def test_golden_coefficients():
    spec = IncrementSpec(1, 1, 1)
    bundle = coefficient_bundle(spec, FunctionalSpec([2, 1]))
    assert bundle.b == (3, 1)
    assert bundle.v == {-1: -3}
    assert bundle.a_mu == (2, -1, -1)
    assert bundle.rhs == (3, 1, 0)


@pytest.mark.parametrize("n,mu,expected", [
    (1, 1, [1, 1, 1, 1, 1]),
    (2, 1, [1, 2, 3, 4, 5]),
    (1, 2, [1, 0, 1, 0, 1]),
    (2, 2, [1, 0, 2, 0, 3]),
])
def test_d_coefficients(n, mu, expected):
    assert d_coefficients(IncrementSpec(n, mu, 0), 4) == expected


@pytest.mark.parametrize("bad", [dict(n=0, mu=1, N=0), dict(n=1, mu=0, N=0), dict(n=1, mu=1, N=-1)])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        IncrementSpec(**bad)


def test_functional_parsing_is_exact():
    f = FunctionalSpec(["1/3", 0.5, 2])
    assert f.a == (Fraction(1, 3), Fraction(1, 2), 2)
    with pytest.raises(ValueError):
        FunctionalSpec([])


@given(specs)
def test_d_inverts_signed_binomial(spec):
    # (1 - x^mu)^n times its series inverse is 1
    K = spec.dim + 3
    d = d_coefficients(spec, K)
    s = signed_binomial(spec)
    prod = [sum(s[j] * d[k - j] for j in range(min(k, len(s) - 1) + 1)) for k in range(K + 1)]
    assert prod == [1] + [0] * K


@given(specs, st.data())
def test_b_is_d_matrix_product(spec, data):
    a = data.draw(st.lists(st.integers(-5, 5), min_size=spec.N + 1, max_size=spec.N + 1))
    D = d_matrix(spec)
    b = b_coefficients(spec, FunctionalSpec(a))
    assert b == [sum(D[k][j] * a[j] for j in range(spec.N + 1)) for k in range(spec.N + 1)]


@given(specs, st.data())
def test_increment_representation(spec, data):
    """sum a(k) xi(k) = sum b(k) zeta^(n)(k) - sum v(k) xi(k), checked on a random path."""
    a = data.draw(st.lists(st.integers(-5, 5), min_size=spec.N + 1, max_size=spec.N + 1))
    seed = data.draw(st.integers(0, 2**16))
    n, mu, N = spec.n, spec.mu, spec.N
    rng = np.random.default_rng(seed)
    lo = -mu * n
    xi = {t: int(x) for t, x in zip(range(lo, N + 1), rng.integers(-9, 9, N + 1 - lo))}
    inc = {k: sum((-1) ** l * comb(n, l) * xi[k - mu * l] for l in range(n + 1)) for k in range(N + 1)}
    b = b_coefficients(spec, FunctionalSpec(a))
    v = v_coefficients(spec, b)
    lhs = sum(a[k] * xi[k] for k in range(N + 1))
    rhs = sum(b[k] * inc[k] for k in range(N + 1)) - sum(v[k] * xi[k] for k in v)
    assert lhs == rhs


@given(specs)
def test_a_mu_is_convolution(spec):
    a = list(range(1, spec.N + 2))
    am = a_mu_coefficients(spec, FunctionalSpec(a))
    s = signed_binomial(spec)
    full = np.convolve(a, s)
    assert am == [int(x) for x in full]
