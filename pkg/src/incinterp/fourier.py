"""Fourier coefficient extraction and the Toeplitz matrices of the linear system."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import IndefiniteMatrixError, QuadratureError
from .increments import IncrementSpec
from .spectral import (
    DEFAULT_GRID,
    ObservationModel,
    RationalDensity,
    midpoint_grid,
    require_minimality,
)

MAX_GRID = 2**20

STANDARD = "standard"
NOISE_FREE = "noise-free"
COINTEGRATED = "cointegrated"


def grid_coefficients(values: np.ndarray, kmax: int) -> np.ndarray:
    """``c(k) = mean_j values_j e^{i lam_j k}`` on the midpoint grid, ``|k| <= kmax``.

    Midpoint-rule approximation of ``(1/2pi) int e^{i lam k} w(lam) dlam``.
    """
    values = np.asarray(values)
    M = values.shape[-1]
    if 2 * kmax >= M:
        raise ValueError(f"grid of {M} points cannot resolve lag {kmax}")
    h = 2 * np.pi / M
    k = np.arange(-kmax, kmax + 1)
    spec = np.fft.ifft(values, axis=-1)
    return np.exp(1j * k * (-np.pi + h / 2)) * spec[..., k % M]


def fourier_coefficients(
    w: Callable,
    kmax: int,
    tol: float = 1e-10,
    grid: int = DEFAULT_GRID,
    max_grid: int = MAX_GRID,
) -> np.ndarray:
    """Coefficients ``c(-kmax..kmax)``, ``c(k) = (1/2pi) int e^{i lam k} w(lam) dlam``.

    The grid is doubled until two successive estimates agree to ``tol``
    (relative to the largest coefficient, floor 1).
    """
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    M = max(grid, 4 * (kmax + 1))
    M = 1 << (M - 1).bit_length()
    prev = None
    diff = float("inf")
    while M <= max_grid:
        cur = grid_coefficients(w(midpoint_grid(M)), kmax)
        if not np.all(np.isfinite(cur)):
            raise QuadratureError("integrand is not finite on the grid", float("inf"))
        if prev is not None:
            diff = float(np.max(np.abs(cur - prev)))
            if diff <= tol * max(1.0, float(np.max(np.abs(cur)))):
                return cur
        prev = cur
        M *= 2
    raise QuadratureError(f"Fourier coefficients did not converge by {max_grid} points", diff)


@dataclass(frozen=True, eq=False)
class ToeplitzMatrix:
    """Hermitian Toeplitz matrix stored as its generating coefficients.

    ``coeffs[k + dim - 1]`` is ``c(k)`` for ``k = -(dim-1)..dim-1``; entry
    ``(row, col)`` is ``c(col - row)``. Coefficients are either a float/complex
    array or a tuple of ``Fraction`` (exact path).
    """

    coeffs: object
    dim: int

    @property
    def exact(self) -> bool:
        return isinstance(self.coeffs, tuple)

    def coefficient(self, k: int):
        return self.coeffs[k + self.dim - 1]

    def dense(self) -> np.ndarray:
        d = self.dim
        idx = np.arange(d)[None, :] - np.arange(d)[:, None] + d - 1
        if self.exact:
            return np.array([[float(self.coeffs[i]) for i in row] for row in idx])
        out = np.asarray(self.coeffs)[idx]
        if np.iscomplexobj(out) and np.max(np.abs(out.imag), initial=0.0) <= 1e-13 * max(1.0, np.max(np.abs(out))):
            out = out.real.copy()
        return out

    def exact_rows(self) -> list[list[Fraction]]:
        d = self.dim
        return [[self.coeffs[j - i + d - 1] for j in range(d)] for i in range(d)]

    @property
    def is_zero(self) -> bool:
        if self.exact:
            return all(c == 0 for c in self.coeffs)
        return not np.any(self.coeffs)

    @classmethod
    def zeros(cls, dim: int, exact: bool = False) -> "ToeplitzMatrix":
        if exact:
            return cls(tuple(Fraction(0) for _ in range(2 * dim - 1)), dim)
        return cls(np.zeros(2 * dim - 1), dim)


@dataclass(frozen=True, eq=False)
class FourierMatrixSet:
    """``P`` and ``T`` of size ``N+mu*n+1`` and ``Q`` of size ``N+1``."""

    P: ToeplitzMatrix
    T: ToeplitzMatrix
    Q: ToeplitzMatrix
    variant: str
    beta: object = 1

    @property
    def exact(self) -> bool:
        return self.P.exact and self.T.exact and self.Q.exact


def _real_if_even(c: np.ndarray) -> np.ndarray:
    if np.max(np.abs(c.imag), initial=0.0) <= 1e-12 * max(1.0, float(np.max(np.abs(c)))):
        return c.real.copy()
    return c


def _check_pd(P: ToeplitzMatrix):
    A = P.dense()
    ev = np.linalg.eigvalsh(A)
    if ev[0] <= 1e-10 * np.trace(A).real:
        raise IndefiniteMatrixError(
            f"P is not positive definite (smallest eigenvalue {ev[0]:.3g}); quadrature breakdown"
        )


def _exact_reciprocal(model: ObservationModel):
    """Exact coefficients of ``1/psi_p`` when ``T`` and ``Q`` vanish identically
    and ``1/psi_f`` is a trigonometric polynomial."""
    if model.cointegrated_mode:
        if model.remainder is None or not model.remainder.is_zero:
            return None
        scale = 1 / Fraction(model.beta) ** 2
    else:
        if not model.g.is_zero:
            return None
        scale = Fraction(1)
    d = model.f
    if not isinstance(d, RationalDensity) or d.n != model.spec.n or d.mu != model.spec.mu:
        return None
    c = d.reciprocal_coefficients()
    return None if c is None else [scale * x for x in c]


def _toeplitz_from_symmetric(half: list, dim: int) -> ToeplitzMatrix:
    coeffs = []
    for k in range(-(dim - 1), dim):
        coeffs.append(Fraction(half[abs(k)]) if abs(k) < len(half) else Fraction(0))
    return ToeplitzMatrix(tuple(coeffs), dim)


def _integrands(model: ObservationModel):
    spec = model.spec

    def psi_p(lam):
        out = model.psi_p(lam)
        if np.any(out <= 0):
            raise IndefiniteMatrixError("observed density vanishes on the quadrature grid")
        return out

    def P(lam):
        return 1.0 / psi_p(lam)

    def T(lam):
        return model.noise(lam) / psi_p(lam)

    def Q(lam):
        return model.psi_f(lam) * np.maximum(model.noise(lam), 0.0) / psi_p(lam)

    return P, T, Q


def build_matrices(model: ObservationModel, tol: float = 1e-10, check_minimality: bool = True) -> FourierMatrixSet:
    """Build the matrix set for any model mode (dispatches on ``model.mode``)."""
    spec: IncrementSpec = model.spec
    dim, qdim = spec.dim, spec.N + 1
    if model.cointegrated_mode:
        variant = COINTEGRATED
    elif model.g.is_zero:
        variant = NOISE_FREE
    else:
        variant = STANDARD
    if check_minimality:
        require_minimality(model, tol)

    exact = _exact_reciprocal(model)
    if exact is not None:
        P = _toeplitz_from_symmetric(exact, dim)
        return FourierMatrixSet(P, ToeplitzMatrix.zeros(dim, True), ToeplitzMatrix.zeros(qdim, True), variant, model.beta)

    fP, fT, fQ = _integrands(model)
    M = model.common_grid()
    noise_zero = (not model.cointegrated_mode and model.g.is_zero) or (
        model.remainder is not None and model.remainder.is_zero
    )
    if M is not None:
        lam = midpoint_grid(M)
        cP = _real_if_even(grid_coefficients(fP(lam), dim - 1))
        cT = _real_if_even(grid_coefficients(fT(lam), dim - 1))
        cQ = _real_if_even(grid_coefficients(fQ(lam), qdim - 1))
    else:
        cP = _real_if_even(fourier_coefficients(fP, dim - 1, tol))
        if noise_zero:
            cT = np.zeros(2 * dim - 1)
            cQ = np.zeros(2 * qdim - 1)
        else:
            cT = _real_if_even(fourier_coefficients(fT, dim - 1, tol))
            cQ = _real_if_even(fourier_coefficients(fQ, qdim - 1, tol))
    P = ToeplitzMatrix(cP, dim)
    _check_pd(P)
    return FourierMatrixSet(P, ToeplitzMatrix(cT, dim), ToeplitzMatrix(cQ, qdim), variant, model.beta)


def build_standard(model: ObservationModel, tol: float = 1e-10) -> FourierMatrixSet:
    if model.cointegrated_mode:
        raise ValueError("use build_cointegrated for cointegrated models")
    return build_matrices(model, tol)


def build_cointegrated(model: ObservationModel, tol: float = 1e-10) -> FourierMatrixSet:
    if not model.cointegrated_mode:
        raise ValueError("model is not cointegrated")
    return build_matrices(model, tol)
