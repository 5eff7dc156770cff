"""Optimal interpolation of a missing block ``xi(0..N)``.

The estimate is ``sum_k w(k) zeta^(n)(k, mu) - sum_{k=-mu n}^{-1} v(k) zeta(k)``
where the increment weights ``w(k)`` live on ``k <= -1`` and
``k >= N + mu n + 1`` and are the Fourier coefficients of the increment-domain
transfer function

    G(lam) = B(e^{i lam}) - A(e^{i lam}) (1 - e^{i lam mu})^n g / psi_p
             - C(e^{i lam}) / psi_p .

The spectral characteristic is ``h(lam) = G(lam) (1 - e^{-i lam mu})^n / (i lam)^n``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import linalg

from .errors import (
    MissingObservationError,
    NumericalError,
    OrthogonalityError,
    TruncationError,
    ValidationError,
)
from .fourier import FourierMatrixSet, ToeplitzMatrix, build_matrices, fourier_coefficients, grid_coefficients
from .increments import CoefficientBundle, FunctionalSpec, IncrementSpec, coefficient_bundle, v_coefficients
from .spectral import DEFAULT_GRID, ObservationModel, midpoint_grid

MAX_LAG = 10_000


@dataclass(frozen=True, eq=False)
class InterpolationSolution:
    model: ObservationModel
    func: FunctionalSpec
    bundle: CoefficientBundle
    matrices: FourierMatrixSet
    c: np.ndarray
    mse: float
    residual: float
    condition: float
    #: quadratic-form pieces: mse = p_term * scale**2 + q_term
    p_term: float = 0.0
    q_term: float = 0.0
    #: factor on B and A plus the boundary term (1/beta for rescaled cointegration)
    scale: object = 1
    c_exact: tuple | None = None
    mse_exact: Fraction | None = None
    #: right-hand side actually used (rhs - T a_mu)
    rhs: np.ndarray = field(default=None, repr=False)

    @property
    def exact(self) -> bool:
        return self.c_exact is not None

    @property
    def boundary_weights(self) -> dict:
        """Coefficients on the raw boundary values ``zeta(k)``, ``k = -mu n..-1``."""
        s = self.scale
        return {k: -s * v for k, v in self.bundle.v.items()}


# ---------------------------------------------------------------------------
# linear algebra


def _solve_exact(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(rhs)
    A = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise NumericalError("singular system in exact solve")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        for r in range(col + 1, n):
            if A[r][col] != 0:
                m = A[r][col] / p
                A[r] = [x - m * y for x, y in zip(A[r], A[col])]
    x = [Fraction(0)] * n
    for i in reversed(range(n)):
        s = A[i][n] - sum((A[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        x[i] = s / A[i][i]
    return x


def _spd_solve(P: np.ndarray, y: np.ndarray, refine: int = 2):
    cf = linalg.cho_factor(P)
    x = linalg.cho_solve(cf, y)
    for _ in range(refine):
        r = y - P @ x
        x = x + linalg.cho_solve(cf, r)
    return x


def _quadratic_solve(matrices: FourierMatrixSet, bundle: CoefficientBundle, a: tuple, rhs_override=None):
    """Solve ``P c = rhs - T a_mu`` and evaluate the quadratic-form MSE pieces."""
    rhs_exact = list(rhs_override if rhs_override is not None else bundle.rhs)
    if matrices.exact:
        Trows = matrices.T.exact_rows()
        y = [Fraction(rhs_exact[i]) - sum((Trows[i][j] * bundle.a_mu[j] for j in range(len(bundle.a_mu))), Fraction(0))
             for i in range(len(rhs_exact))]
        c = _solve_exact(matrices.P.exact_rows(), y)
        Qrows = matrices.Q.exact_rows()
        p_term = sum((yi * ci for yi, ci in zip(y, c)), Fraction(0))
        q_term = sum((a[i] * Qrows[i][j] * a[j] for i in range(len(a)) for j in range(len(a))), Fraction(0))
        P = matrices.P.dense()
        cf = np.array([float(x) for x in c])
        yf = np.array([float(x) for x in y])
        resid = float(np.linalg.norm(P @ cf - yf))
        return dict(c=cf, y=yf, p_term=p_term, q_term=q_term, residual=resid,
                    condition=float(np.linalg.cond(P)), c_exact=tuple(c))
    P = matrices.P.dense()
    T = matrices.T.dense()
    Q = matrices.Q.dense()
    rhs = np.array([float(x) for x in rhs_exact])
    a_mu = np.array([float(x) for x in bundle.a_mu])
    af = np.array([float(x) for x in a])
    Ta = T @ a_mu
    y = rhs - Ta
    try:
        c = _spd_solve(P, y)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"P is not positive definite: {exc}") from exc
    resid = float(np.linalg.norm(P @ c - y))
    scale = np.linalg.norm(rhs) + np.linalg.norm(Ta)
    if resid > 1e-9 * max(scale, 1e-300) and scale > 0:
        raise NumericalError(f"linear solve residual {resid:.3g} too large (cond {np.linalg.cond(P):.3g})")
    p_term = float(np.real(np.vdot(c, y)))
    q_term = float(np.real(af @ Q @ af))
    return dict(c=c, y=y, p_term=p_term, q_term=q_term, residual=resid,
                condition=float(np.linalg.cond(P)), c_exact=None)


def _make_solution(model, func, bundle, matrices, parts, scale=1) -> InterpolationSolution:
    exact = parts["c_exact"] is not None and isinstance(scale, (int, Fraction))
    s = Fraction(scale) if exact else float(scale)
    if exact:
        c_exact = tuple(s * x for x in parts["c_exact"])
        mse_exact = s * s * parts["p_term"] + parts["q_term"]
        c = np.array([float(x) for x in c_exact])
        mse = float(mse_exact)
    else:
        c_exact = mse_exact = None
        c = float(s) * np.asarray(parts["c"])
        mse = float(s) ** 2 * float(parts["p_term"]) + float(parts["q_term"])
    if mse < 0:
        if mse < -1e-9 * (abs(float(parts["p_term"])) + abs(float(parts["q_term"])) + 1e-300):
            raise NumericalError(f"negative mean-square error {mse:.3g}")
        mse = 0.0
    return InterpolationSolution(
        model=model, func=func, bundle=bundle, matrices=matrices, c=c, mse=mse,
        residual=parts["residual"], condition=parts["condition"],
        p_term=float(parts["p_term"]), q_term=float(parts["q_term"]), scale=s,
        c_exact=c_exact, mse_exact=mse_exact, rhs=parts["y"],
    )


def _check_func(model: ObservationModel, func: FunctionalSpec):
    if func.N != model.spec.N:
        raise ValidationError(
            f"functional has {len(func.a)} coefficients but the gap has {model.spec.N + 1}"
        )


def solve(model: ObservationModel, func: FunctionalSpec, tol: float = 1e-10,
          matrices: FourierMatrixSet | None = None) -> InterpolationSolution:
    """Optimal estimate of ``A_N xi`` from ``xi + eta`` observed off the gap."""
    if model.cointegrated_mode:
        return solve_cointegrated(model, func, tol=tol, matrices=matrices)
    _check_func(model, func)
    bundle = coefficient_bundle(model.spec, func)
    matrices = matrices or build_matrices(model, tol)
    parts = _quadratic_solve(matrices, bundle, func.a)
    return _make_solution(model, func, bundle, matrices, parts)


def solve_noise_free(model: ObservationModel, func: FunctionalSpec, tol: float = 1e-10) -> InterpolationSolution:
    """Noise-free case: only ``F = P`` enters, ``T`` and ``Q`` are dropped."""
    nf = ObservationModel.noise_free(model.spec, model.f)
    return solve(nf, func, tol)


def solve_cointegrated(model: ObservationModel, func: FunctionalSpec, tol: float = 1e-10,
                       rescale: bool = False, matrices: FourierMatrixSet | None = None) -> InterpolationSolution:
    """Interpolation of ``xi`` from a sequence ``zeta`` cointegrated with it.

    By default the characteristic and MSE use the beta-matrices exactly as in
    the standard construction (``c = P^{-1}(rhs - T a_mu)``). With
    ``rescale=True`` the estimate is divided by ``beta`` (characteristic and
    boundary term) and the ``P``-part of the error by ``beta^2``; this is the
    variance-optimal estimate of ``A_N xi`` itself when ``beta != 1``. The two
    coincide for ``beta = 1``.
    """
    if not model.cointegrated_mode:
        raise ValidationError("model is not cointegrated")
    _check_func(model, func)
    bundle = coefficient_bundle(model.spec, func)
    matrices = matrices or build_matrices(model, tol)
    parts = _quadratic_solve(matrices, bundle, func.a)
    scale = 1
    if rescale:
        b = model.beta
        scale = 1 / Fraction(b) if isinstance(b, (int, Fraction)) else 1.0 / float(b)
    return _make_solution(model, func, bundle, matrices, parts, scale)


# ---------------------------------------------------------------------------
# frequency-domain evaluation


def _poly(coeffs, lam, offset=0):
    lam = np.asarray(lam, dtype=float)
    z = np.exp(1j * lam)
    out = np.zeros(lam.shape, dtype=complex)
    for k, c in enumerate(coeffs):
        if c != 0:
            out = out + float(c) * z ** (k + offset)
    return out


def increment_kernel(lam, spec: IncrementSpec) -> np.ndarray:
    """``(1 - e^{-i lam mu})^n / (i lam)^n`` with its limit ``mu^n`` at 0."""
    lam = np.asarray(lam, dtype=float)
    x = spec.mu * lam / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))
    return (spec.mu * np.exp(-1j * x) * sinc) ** spec.n


def transfer_function(sol: InterpolationSolution, lam) -> np.ndarray:
    """Increment-domain transfer function ``G(lam)``."""
    m = sol.model
    spec = m.spec
    lam = np.asarray(lam, dtype=float)
    s = float(sol.scale)
    psi_p = m.psi_p(lam)
    B = _poly(sol.bundle.b, lam)
    C = _poly(sol.c, lam)
    out = s * B - C / psi_p
    noise = m.noise(lam)
    if np.any(noise != 0):
        A = _poly(sol.func.a, lam)
        out = out - s * A * (1 - np.exp(1j * lam * spec.mu)) ** spec.n * noise / psi_p
    return out


def spectral_characteristic(sol: InterpolationSolution, lam) -> np.ndarray:
    """``h(lam)``, evaluated in the reduced form ``kernel(lam) * G(lam)``."""
    return increment_kernel(lam, sol.model.spec) * transfer_function(sol, lam)


def _mse_integrands(sol: InterpolationSolution):
    m = sol.model
    spec = m.spec
    s = float(sol.scale)

    def both(lam):
        psi_f = m.psi_f(lam)
        psi_p = m.psi_p(lam)
        noise = m.noise(lam)
        A = _poly(sol.func.a, lam)
        C = _poly(sol.c, lam)
        e_minus = (1 - np.exp(-1j * lam * spec.mu)) ** spec.n
        e_plus = (1 - np.exp(1j * lam * spec.mu)) ** spec.n
        first = np.abs(s * A * m.signal_weight() * psi_f - C * e_minus) ** 2 * noise / psi_p**2
        second = np.abs(s * A * e_plus * np.maximum(noise, 0.0) + C) ** 2 * psi_f / psi_p**2
        if m.cointegrated_mode and s != 1.0:
            # rescaled estimate: only the first integral picks up 1/beta^2
            second = second / s**2
        return first, second

    return both


def mse_integral(sol: InterpolationSolution, tol: float = 1e-10) -> float:
    """Mean-square error by direct quadrature of the two frequency integrals."""
    if sol.func.is_zero:
        return 0.0
    both = _mse_integrands(sol)
    M = sol.model.common_grid()
    if M is not None:
        first, second = both(midpoint_grid(M))
        return float(np.mean(first + second))
    c = fourier_coefficients(lambda lam: np.sum(both(lam), axis=0), 0, tol)
    return float(c[0].real)


# ---------------------------------------------------------------------------
# time-domain weights


def _laurent_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for i, x in a.items():
        for j, y in b.items():
            out[i + j] = out.get(i + j, 0) + x * y
    return out


def _exact_transfer(sol: InterpolationSolution):
    """Exact Laurent coefficients of ``G`` when ``1/psi_p`` is a trig polynomial
    and there is no noise term; ``None`` otherwise."""
    if not sol.exact:
        return None
    from .fourier import _exact_reciprocal

    half = _exact_reciprocal(sol.model)
    if half is None:
        return None
    r = {k: half[abs(k)] for k in range(-(len(half) - 1), len(half))}
    C = {k: c for k, c in enumerate(sol.c_exact)}
    G = {k: sol.scale * b for k, b in enumerate(sol.bundle.b)}
    for k, v in _laurent_mul(C, r).items():
        G[k] = G.get(k, 0) - v
    return G


@dataclass(frozen=True)
class IncrementWeights:
    """Filter weights on observed increments ``zeta^(n)(k, mu)``."""

    weights: dict
    K: int
    orthogonality: float
    tail: float
    exact: bool = False

    def __getitem__(self, k):
        return self.weights.get(k, 0)

    def __len__(self):
        return len(self.weights)


def transfer_coefficients(sol: InterpolationSolution, kmax: int, tol: float = 1e-10) -> np.ndarray:
    """``w(k) = (1/2pi) int G(lam) e^{-i lam k} dlam`` for ``k = -kmax..kmax``."""
    M = sol.model.common_grid()
    if M is not None:
        vals = transfer_function(sol, midpoint_grid(M))
        c = grid_coefficients(vals, min(kmax, M // 2 - 1))
        if c.size < 2 * kmax + 1:
            c = np.pad(c, (kmax - (c.size - 1) // 2,) * 2)
        return c[::-1]
    c = fourier_coefficients(lambda lam: transfer_function(sol, lam), kmax, tol)
    return c[::-1]


def increment_weights(sol: InterpolationSolution, K: int | None = None, tol: float = 1e-8,
                      orth_tol: float = 1e-8, max_lag: int = MAX_LAG) -> IncrementWeights:
    """Weights ``w(k)`` for ``-K <= k <= -1`` and ``D+1 <= k <= D+K`` (``D = N + mu n``).

    With ``K=None`` the truncation is chosen as the smallest ``K`` whose tail
    is below ``tol``; an explicit ``K`` keeps every weight and reports the tail.
    """
    if K is not None and K < 1:
        raise ValidationError("K must be >= 1")
    D = sol.model.spec.dim - 1
    if sol.func.is_zero:
        return IncrementWeights({}, K or 1, 0.0, 0.0, sol.exact)
    G = _exact_transfer(sol)
    if G is not None:
        gap = max((abs(float(v)) for k, v in G.items() if 0 <= k <= D), default=0.0)
        if gap > 0:
            raise OrthogonalityError(f"transfer function has weight {gap:.3g} inside the gap")
        outside = {k: v for k, v in G.items() if (k < 0 or k > D) and v != 0}
        span = max((max(-k, k - D) for k in outside), default=1)
        K = K or span
        tail = max((abs(float(v)) for k, v in outside.items() if k < -K or k > D + K), default=0.0)
        w = {k: v for k, v in sorted(outside.items()) if -K <= k <= D + K}
        return IncrementWeights(w, K, 0.0, tail, True)

    kmax = D + (K if K is not None else 64)
    while True:
        c = transfer_coefficients(sol, kmax)
        lags = np.arange(-kmax, kmax + 1)
        mag = np.abs(c)
        imag = np.max(np.abs(c.imag))
        if imag > 1e-10 * max(1.0, float(np.max(mag))):
            raise NumericalError(f"weights have imaginary part {imag:.3g}; densities not even?")
        out_mask = (lags < 0) | (lags > D)
        if K is None:
            # smallest K whose tail is below tol
            dist = np.where(lags < 0, -lags, lags - D)
            big = out_mask & (mag > tol)
            need = int(np.max(dist[big])) if np.any(big) else 1
            if need + D + 8 < kmax or kmax >= max_lag + D:
                Kc = max(need, 1)
                break
            kmax = min(2 * kmax, max_lag + D)
            continue
        Kc = K
        break
    inside = (lags >= 0) & (lags <= D)
    orth = float(np.max(mag[inside]))
    scale = max(1.0, float(np.max(mag)))
    if orth > orth_tol * scale:
        raise OrthogonalityError(f"transfer function has weight {orth:.3g} inside the gap")
    window = out_mask & (lags >= -Kc) & (lags <= D + Kc)
    beyond = out_mask & ~window
    tail = float(np.max(mag[beyond])) if np.any(beyond) else 0.0
    if K is None and tail > tol * scale:
        raise TruncationError(f"weights did not decay below {tol:.3g} by lag {max_lag} (tail {tail:.3g})")
    w = {int(k): float(v.real) for k, v in zip(lags[window], c[window])}
    return IncrementWeights(w, Kc, orth, tail, False)


def time_weights(sol: InterpolationSolution, weights: IncrementWeights | None = None, **kw) -> dict:
    """Coefficients on raw observations ``zeta(t)`` (increments expanded)."""
    spec = sol.model.spec
    weights = weights or increment_weights(sol, **kw)
    out: dict = {}
    for k, w in weights.weights.items():
        for l in range(spec.n + 1):
            t = k - spec.mu * l
            out[t] = out.get(t, 0) + w * (-1) ** l * comb(spec.n, l)
    for t, w in sol.boundary_weights.items():
        out[t] = out.get(t, 0) + w
    zero = 0 if weights.exact else 1e-15
    return {t: v for t, v in sorted(out.items()) if abs(v) > zero}


# ---------------------------------------------------------------------------
# observations


@dataclass(frozen=True)
class ObservationSeries:
    """Observed values ``zeta(t)`` keyed by integer time."""

    values: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(self, "values", {int(k): float(v) for k, v in dict(self.values).items()})

    @classmethod
    def from_csv(cls, path) -> "ObservationSeries":
        vals = {}
        with open(path, newline="") as fh:
            rows = csv.reader(fh)
            for row in rows:
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    t = int(row[0])
                except ValueError:
                    continue  # header
                vals[t] = float(row[1])
        return cls(vals)

    def check_gap(self, spec: IncrementSpec):
        present = [t for t in range(spec.N + 1) if t in self.values]
        if present:
            raise ValidationError(f"series has values inside the gap at t={present}")

    def value(self, t: int) -> float:
        try:
            return self.values[t]
        except KeyError:
            raise MissingObservationError(f"observation at t={t} is required but missing") from None

    @property
    def span(self) -> tuple[int, int]:
        return min(self.values), max(self.values)


def estimate(sol: InterpolationSolution, series: ObservationSeries, weights: IncrementWeights | None = None, **kw):
    """Value of the optimal estimate on an observed series."""
    series.check_gap(sol.model.spec)
    tw = time_weights(sol, weights, **kw)
    if all(isinstance(v, (int, Fraction)) for v in tw.values()):
        return float(sum((w * Fraction(series.value(t)) for t, w in tw.items()), Fraction(0)))
    return float(sum(float(w) * series.value(t) for t, w in tw.items()))


# ---------------------------------------------------------------------------
# single missing value


def solve_point(model: ObservationModel, p: int, tol: float = 1e-10,
                matrices: FourierMatrixSet | None = None) -> InterpolationSolution:
    """Optimal estimate of the single value ``xi(p)``, ``0 <= p <= N``.

    Uses ``d_p = (d(p), ..., d(0), 0, ...)`` as right-hand side and the sparse
    matrix whose column ``k <= n`` is column ``p + mu k`` of ``T``.
    """
    spec = model.spec
    if not 0 <= p <= spec.N:
        raise ValidationError(f"p={p} outside the gap 0..{spec.N}")
    func = FunctionalSpec.unit(p, spec.N)
    bundle = coefficient_bundle(spec, func)
    matrices = matrices or build_matrices(model, tol)
    dim = spec.dim
    d_p = [bundle.d[p - k] if k <= p else 0 for k in range(dim)]
    a_n = [(-1) ** k * comb(spec.n, k) if k <= spec.n else 0 for k in range(dim)]
    # T_p a_n, with T_p[l, k] = T[l, p + mu k] for k <= n
    if matrices.exact:
        Trows = matrices.T.exact_rows()
        Tpa = [sum((Trows[l][p + spec.mu * k] * a_n[k] for k in range(spec.n + 1)), Fraction(0)) for l in range(dim)]
    else:
        Td = matrices.T.dense()
        cols = [p + spec.mu * k for k in range(spec.n + 1)]
        Tpa = Td[:, cols] @ np.array(a_n[: spec.n + 1], dtype=float)
    rhs = [d_p[l] - Tpa[l] for l in range(dim)]
    # rhs already carries the T-term; solve with T suppressed
    zeroT = FourierMatrixSet(matrices.P, ToeplitzMatrix.zeros(dim, matrices.exact), matrices.Q,
                             matrices.variant, matrices.beta)
    parts = _quadratic_solve(zeroT, bundle, func.a, rhs_override=rhs)
    return _make_solution(model, func, bundle, matrices, parts)


def estimate_point(model: ObservationModel, p: int, series: ObservationSeries | None = None, tol: float = 1e-10):
    """``(value, mse)`` for ``xi(p)``; ``value`` is ``None`` without a series."""
    sol = solve_point(model, p, tol)
    value = estimate(sol, series) if series is not None else None
    return value, sol.mse
