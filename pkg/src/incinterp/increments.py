"""Coefficient algebra for n-th increments with step mu.

Everything here is exact: integer inputs give integers, rational inputs give
``Fraction`` values. Callers convert to floating point when they need to.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from numbers import Rational
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class IncrementSpec:
    """Increment order ``n``, step ``mu`` and the last missing index ``N``.

    The missing block is ``{0, ..., N}``.
    """

    n: int
    mu: int
    N: int

    def __post_init__(self):
        for name in ("n", "mu"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"N must be an integer >= 0, got {self.N!r}")

    @property
    def dim(self) -> int:
        """Size of the linear system, ``N + mu*n + 1``."""
        return self.N + self.mu * self.n + 1

    @property
    def shift(self) -> int:
        return self.mu * self.n


def _exact(x):
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    f = Fraction(float(x))
    return int(f) if f.denominator == 1 else f


@dataclass(frozen=True)
class FunctionalSpec:
    """Coefficients ``a(0..N)`` of the functional ``sum_k a(k) xi(k)``.

    Values are stored exactly (floats are converted to their exact binary
    rational value, strings such as ``"1/3"`` are parsed).
    """

    a: tuple

    def __init__(self, a: Sequence):
        vals = tuple(_exact(x) for x in a)
        if len(vals) == 0:
            raise ValueError("functional needs at least one coefficient")
        object.__setattr__(self, "a", vals)

    @property
    def N(self) -> int:
        return len(self.a) - 1

    @property
    def is_zero(self) -> bool:
        return all(x == 0 for x in self.a)

    def as_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.a])

    @classmethod
    def unit(cls, p: int, N: int) -> "FunctionalSpec":
        """The functional picking out ``xi(p)``."""
        if not 0 <= p <= N:
            raise ValueError(f"index {p} outside gap 0..{N}")
        return cls([1 if k == p else 0 for k in range(N + 1)])


def _check(spec: IncrementSpec, func: FunctionalSpec):
    if func.N != spec.N:
        raise ValueError(
            f"functional has {len(func.a)} coefficients but the gap has {spec.N + 1}"
        )


def d_coefficients(spec: IncrementSpec, K: int) -> list[int]:
    """Power-series coefficients of ``(sum_j x^(mu*j))^n`` up to ``x^K``."""
    if K < 0:
        raise ValueError("K must be >= 0")
    n, mu = spec.n, spec.mu
    # (1 - x^mu)^(-n): coefficient of x^(mu*j) is C(j+n-1, n-1)
    out = [0] * (K + 1)
    for j in range(K // mu + 1):
        out[mu * j] = comb(j + n - 1, n - 1)
    return out


def d_matrix(spec: IncrementSpec) -> list[list[int]]:
    """Upper-triangular Toeplitz matrix with ``D[k][j] = d(j - k)`` for ``j >= k``."""
    d = d_coefficients(spec, spec.N)
    m = spec.N + 1
    return [[d[j - k] if j >= k else 0 for j in range(m)] for k in range(m)]


def b_coefficients(spec: IncrementSpec, func: FunctionalSpec) -> list:
    """``b(k) = sum_{m=k}^N a(m) d(m-k)`` for ``k = 0..N``."""
    _check(spec, func)
    d = d_coefficients(spec, spec.N)
    a = func.a
    return [sum((a[m] * d[m - k] for m in range(k, spec.N + 1)), 0) for k in range(spec.N + 1)]


def _ceil_div(p: int, q: int) -> int:
    return -((-p) // q)


def v_coefficients(spec: IncrementSpec, b: Sequence) -> dict[int, object]:
    """Boundary coefficients ``v(k)`` for ``k = -mu*n .. -1``.

    Returned as a mapping from the (negative) time index to the value.
    """
    n, mu, N = spec.n, spec.mu, spec.N
    if len(b) != N + 1:
        raise ValueError(f"b must have length {N + 1}")
    out = {}
    for k in range(-mu * n, 0):
        lo = _ceil_div(-k, mu)
        hi = min((N - k) // mu, n)
        out[k] = sum(((-1) ** l * comb(n, l) * b[l * mu + k] for l in range(lo, hi + 1)), 0)
    return out


def a_mu_coefficients(spec: IncrementSpec, func: FunctionalSpec) -> list:
    """``a_mu(m)`` for ``m = 0..N+mu*n``: ``a`` convolved with the signed binomial
    pattern at lags ``mu*l``."""
    _check(spec, func)
    n, mu, N = spec.n, spec.mu, spec.N
    a = func.a
    out = []
    for m in range(spec.dim):
        lo = max(_ceil_div(m - N, mu), 0)
        hi = min(m // mu, n)
        out.append(sum(((-1) ** l * comb(n, l) * a[m - mu * l] for l in range(lo, hi + 1)), 0))
    return out


def signed_binomial(spec: IncrementSpec) -> list[int]:
    """Coefficients of ``(1 - x^mu)^n`` as a dense list of length ``mu*n + 1``."""
    out = [0] * (spec.shift + 1)
    for l in range(spec.n + 1):
        out[spec.mu * l] = (-1) ** l * comb(spec.n, l)
    return out


@dataclass(frozen=True)
class CoefficientBundle:
    """All exact coefficient families a solve needs."""

    d: tuple
    b: tuple
    v: dict
    a_mu: tuple
    rhs: tuple

    def as_float(self, name: str) -> np.ndarray:
        vals = getattr(self, name)
        if isinstance(vals, dict):
            return np.array([float(vals[k]) for k in sorted(vals)])
        return np.array([float(x) for x in vals])


def coefficient_bundle(spec: IncrementSpec, func: FunctionalSpec) -> CoefficientBundle:
    b = b_coefficients(spec, func)
    return CoefficientBundle(
        d=tuple(d_coefficients(spec, spec.dim - 1)),
        b=tuple(b),
        v=v_coefficients(spec, b),
        a_mu=tuple(a_mu_coefficients(spec, func)),
        rhs=tuple(b) + (0,) * spec.shift,
    )
