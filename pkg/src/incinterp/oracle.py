"""Time-domain reference: finite Gaussian projection.

Builds the covariances of the observed increments and of the noise from
their spectral densities, then projects the target onto the increments at
``k = -K..-1`` and ``k = D+1..D+K`` (``D = N + mu n``). This never touches
the Toeplitz system of the frequency-domain solver, so it serves as an
independent check of its weights and error.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from scipy import linalg

from .errors import IndefiniteMatrixError, NumericalError
from .fourier import fourier_coefficients, grid_coefficients
from .increments import FunctionalSpec, coefficient_bundle
from .spectral import ObservationModel, midpoint_grid


@dataclass(frozen=True)
class Covariances:
    """``R_inc(m)`` of the observed increments and ``R_eta(m)`` of the noise, ``|m| <= maxlag``."""

    inc: np.ndarray
    noise: np.ndarray
    maxlag: int

    def r_inc(self, m):
        return self.inc[np.asarray(m) + self.maxlag]

    def r_noise(self, m):
        return self.noise[np.asarray(m) + self.maxlag]


def covariances(model: ObservationModel, maxlag: int, tol: float = 1e-12) -> Covariances:
    M = model.common_grid()

    def coeffs(fn):
        if M is not None:
            return grid_coefficients(fn(midpoint_grid(M)), maxlag).real
        return fourier_coefficients(fn, maxlag, tol).real

    inc = coeffs(model.psi_p)
    noise_zero = (not model.cointegrated_mode and model.g.is_zero) or (
        model.remainder is not None and model.remainder.is_zero
    )
    noise = np.zeros(2 * maxlag + 1) if noise_zero else coeffs(model.noise)
    cov = Covariances(inc, noise, maxlag)
    spot_check_psd(cov)
    return cov


def spot_check_psd(cov: Covariances, trials: int = 8, size: int = 12, seed: int = 0):
    """Eigenvalue check on random principal Toeplitz minors of both tables."""
    rng = np.random.default_rng(seed)
    for name, r in (("increment", cov.r_inc), ("noise", cov.r_noise)):
        for _ in range(trials):
            idx = np.sort(rng.choice(cov.maxlag + 1, size=min(size, cov.maxlag + 1), replace=False))
            T = r(idx[:, None] - idx[None, :])
            _check_gram(T, f"{name} covariance minor")


def _check_gram(G: np.ndarray, what: str):
    tr = float(np.trace(G))
    if tr == 0:
        return
    lo = float(np.linalg.eigvalsh(G)[0])
    if lo < -1e-10 * abs(tr):
        raise IndefiniteMatrixError(f"{what} is not positive semidefinite (min eigenvalue {lo:.3g})")


@dataclass(frozen=True)
class ProjectionResult:
    weights: dict          # increment index -> weight
    boundary: dict         # raw time index -> weight on zeta(t)
    mse: float
    K: int

    def time_weights(self, spec) -> dict:
        out: dict = {}
        for k, w in self.weights.items():
            for l in range(spec.n + 1):
                t = k - spec.mu * l
                out[t] = out.get(t, 0.0) + w * (-1) ** l * comb(spec.n, l)
        for t, w in self.boundary.items():
            out[t] = out.get(t, 0.0) + w
        return dict(sorted(out.items()))


def _normal_solve(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the normal equations; pivoted QR when Cholesky breaks down."""
    try:
        return linalg.cho_solve(linalg.cho_factor(G), rhs)
    except linalg.LinAlgError:
        pass
    Q, R, piv = linalg.qr(G, pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > d[0] * G.shape[0] * np.finfo(float).eps)) if d.size and d[0] > 0 else 0
    if rank < G.shape[0]:
        raise NumericalError(f"singular Gram matrix: effective rank {rank} of {G.shape[0]}")
    w = np.empty_like(rhs)
    w[piv] = linalg.solve_triangular(R, Q.T @ rhs)
    return w


def project(model: ObservationModel, func: FunctionalSpec, K: int = 50, tol: float = 1e-12) -> ProjectionResult:
    """Best linear estimate of ``A_N xi`` from ``2K`` observed increments.

    In the cointegrated case the observed increments are
    ``beta xi^(n) + eta^(n)`` and the estimate is divided by ``beta``.
    """
    spec = model.spec
    n, mu, D = spec.n, spec.mu, spec.dim - 1
    bundle = coefficient_bundle(spec, func)
    b = np.array([float(x) for x in bundle.b])
    a = func.as_float()
    obs = np.concatenate([np.arange(-K, 0), np.arange(D + 1, D + K + 1)])
    maxlag = D + 2 * K + mu * n + 1
    cov = covariances(model, maxlag, tol)

    tgt = np.arange(spec.N + 1)  # b lives on increments 0..N, a on eta(0..N)

    def cross(k, j):
        # Cov(eta(k), zeta^(n)(j))
        return sum((-1) ** l * comb(n, l) * cov.r_noise(j - mu * l - k) for l in range(n + 1))

    G = cov.r_inc(obs[:, None] - obs[None, :])
    gamma = b @ cov.r_inc(tgt[:, None] - obs[None, :]) - a @ cross(tgt[:, None], obs[None, :])
    var_h = (
        b @ cov.r_inc(tgt[:, None] - tgt[None, :]) @ b
        - 2 * b @ cross(tgt[None, :], tgt[:, None]) @ a
        + a @ cov.r_noise(tgt[:, None] - tgt[None, :]) @ a
    )
    _check_gram(G, "Gram matrix")
    w = _normal_solve(G, gamma)
    mse = float(var_h - gamma @ w)
    s = 1.0 / float(model.beta) if model.cointegrated_mode else 1.0
    weights = {int(k): float(s * x) for k, x in zip(obs, w)}
    boundary = {k: -s * float(v) for k, v in bundle.v.items()}
    return ProjectionResult(weights, boundary, max(mse, 0.0) * s * s, K)
