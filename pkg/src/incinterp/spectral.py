"""Spectral densities and the observation model built from them.

Densities follow the convention where the covariance of a stationary sequence
with density ``g`` is ``(1/2pi) * int e^{i lam m} g(lam) dlam``.

A density of a sequence with stationary n-th increments (step mu) is carried
in its *reduced* form ``psi = |1 - e^{-i lam mu}|^{2n} lam^{-2n} f``, which is
the ordinary spectral density of the increment sequence. All downstream
integrands are written in terms of reduced quantities so that the removable
singularity at ``lam = 0`` never has to be evaluated numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import MinimalityError, PoleError, QuadratureError, ValidationError
from .increments import IncrementSpec, _exact

DEFAULT_GRID = 4096


def midpoint_grid(M: int) -> np.ndarray:
    """``M`` nodes on ``[-pi, pi)`` offset by half a step.

    With ``M`` a power of two no node lands on ``0``, ``+-pi`` or ``2 pi j/mu``.
    """
    h = 2 * np.pi / M
    return -np.pi + (np.arange(M) + 0.5) * h


def increment_power(lam, spec: IncrementSpec) -> np.ndarray:
    """``|1 - e^{i lam mu}|^{2n}``."""
    lam = np.asarray(lam, dtype=float)
    return (2.0 - 2.0 * np.cos(spec.mu * lam)) ** spec.n


def kernel_ratio(lam, n: int, mu: int) -> np.ndarray:
    """``|1 - e^{-i lam mu}|^{2n} / lam^{2n}`` with its limit ``mu^{2n}`` at 0."""
    lam = np.asarray(lam, dtype=float)
    if n == 0:
        return np.ones_like(lam)
    x = mu * lam / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))
    return (mu * sinc) ** (2 * n)


def autocorrelation(coeffs: Sequence) -> list:
    """Coefficients ``r(0..q)`` of ``|sum_j c_j e^{-i lam j}|^2 = sum_k r(|k|) e^{i lam k}``."""
    q = len(coeffs) - 1
    return [sum((coeffs[j] * coeffs[j + k] for j in range(q - k + 1)), 0) for k in range(q + 1)]


def _poly_on_circle(coeffs, lam):
    z = np.exp(-1j * np.asarray(lam, dtype=float))
    return np.polyval(np.asarray([complex(c) for c in coeffs])[::-1], z)


class Density:
    """Interface shared by all density representations."""

    kind = "abstract"
    #: increment order and step the density is integrated with (0 = stationary)
    n = 0
    mu = 1

    @property
    def is_zero(self) -> bool:
        return False

    def __call__(self, lam) -> np.ndarray:
        raise NotImplementedError

    def reduced(self, lam, n: int, mu: int) -> np.ndarray:
        """``|1 - e^{-i lam mu}|^{2n} lam^{-2n} f(lam)``."""
        return kernel_ratio(lam, n, mu) * self(lam)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class RationalDensity(Density):
    """Rational spectral density.

    ``psi(lam) = scale * |num(e^{-i lam})|^2 / |den(e^{-i lam})|^2`` where
    ``num``/``den`` are polynomial coefficient vectors in ``e^{-i lam}``
    (lowest power first). For ``n >= 1`` the density is that of a sequence
    whose n-th increments with step ``mu`` have density ``psi``, i.e.
    ``f = lam^{2n} psi / |1 - e^{-i lam mu}|^{2n}``.
    """

    num: tuple = (1,)
    den: tuple = (1,)
    scale: object = 1
    n: int = 0
    mu: int = 1
    kind = "rational"

    def __post_init__(self):
        object.__setattr__(self, "num", tuple(_exact(c) for c in self.num))
        object.__setattr__(self, "den", tuple(_exact(c) for c in self.den))
        object.__setattr__(self, "scale", _exact(self.scale))
        if not self.num or not self.den or all(c == 0 for c in self.den):
            raise ValidationError("rational density needs nonempty num/den with den != 0")
        if self.scale < 0:
            raise ValidationError("density scale must be nonnegative")
        if self.n < 0 or self.mu < 1:
            raise ValidationError("invalid increment order/step on density")
        roots = np.roots(np.array([float(c) for c in self.den])[::-1]) if len(self.den) > 1 else []
        if any(abs(abs(r) - 1.0) < 1e-12 for r in roots):
            raise ValidationError("denominator has a zero on the unit circle")

    @classmethod
    def ar(cls, phi: Sequence, scale=1, n=0, mu=1):
        """Increment density of ``x(m) + sum_j phi_j x(m-j) = e(m)``."""
        return cls(num=(1,), den=(1, *phi), scale=scale, n=n, mu=mu)

    @property
    def is_zero(self) -> bool:
        return self.scale == 0 or all(c == 0 for c in self.num)

    def psi(self, lam) -> np.ndarray:
        num = np.abs(_poly_on_circle(self.num, lam)) ** 2
        den = np.abs(_poly_on_circle(self.den, lam)) ** 2
        return float(self.scale) * num / den

    def psi_bounded_below(self) -> bool:
        if self.is_zero:
            return False
        if len(self.num) == 1:
            return True
        roots = np.roots(np.array([float(c) for c in self.num])[::-1])
        return all(abs(abs(r) - 1.0) > 1e-8 for r in roots)

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        psi = self.psi(lam)
        if self.n == 0:
            return psi
        ratio = kernel_ratio(lam, self.n, self.mu)
        pole = (ratio == 0) & (psi > 0)
        if np.any(pole):
            raise PoleError(f"density has a pole at lambda={lam[pole].ravel()[0]!r}")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(ratio == 0, 0.0, psi / np.where(ratio == 0, 1.0, ratio))

    def reduced(self, lam, n: int, mu: int) -> np.ndarray:
        if self.n == n and self.mu == mu:
            return self.psi(lam)
        if self.n == 0:
            return kernel_ratio(lam, n, mu) * self.psi(lam)
        return kernel_ratio(lam, n, mu) * self(lam)

    def reciprocal_coefficients(self):
        """Exact Fourier coefficients ``c(0..q)`` of ``1/psi`` when it is a
        trigonometric polynomial (constant numerator), else ``None``."""
        if len(self.num) != 1 or self.is_zero:
            return None
        k = Fraction(1) / (Fraction(self.scale) * Fraction(self.num[0]) ** 2)
        return [k * r for r in autocorrelation([Fraction(c) for c in self.den])]

    def to_dict(self) -> dict:
        return {
            "kind": "rational",
            "num": [_jsonable(c) for c in self.num],
            "den": [_jsonable(c) for c in self.den],
            "scale": _jsonable(self.scale),
            "n": self.n,
            "mu": self.mu,
        }


ZERO = RationalDensity(num=(0,), den=(1,), scale=0)


@dataclass(frozen=True, eq=False)
class GridDensity(Density):
    """Nonnegative samples on the midpoint grid of size ``len(values)``.

    Off-grid evaluation uses periodic linear interpolation.
    """

    values: np.ndarray
    kind = "grid"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValidationError("grid density needs a 1-d array of samples")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValidationError("grid density samples must be finite and nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def M(self) -> int:
        return self.values.size

    @property
    def grid(self) -> np.ndarray:
        return midpoint_grid(self.M)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def on_grid(self, lam) -> bool:
        lam = np.asarray(lam)
        return lam.shape == (self.M,) and np.allclose(lam, self.grid, rtol=0, atol=1e-14)

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.on_grid(lam):
            return self.values
        h = 2 * np.pi / self.M
        pos = (lam + np.pi) / h - 0.5
        i0 = np.floor(pos).astype(int)
        t = pos - i0
        v = self.values
        return (1 - t) * v[i0 % self.M] + t * v[(i0 + 1) % self.M]

    @classmethod
    def sample(cls, density: Density, M: int) -> "GridDensity":
        return cls(np.asarray(density(midpoint_grid(M)), dtype=float))

    def to_dict(self) -> dict:
        return {"kind": "grid", "values": [float(x) for x in self.values]}


@dataclass(frozen=True)
class CompositeDensity(Density):
    """``sum_i coef_i * lam^{2 * power_i} * density_i(lam)``."""

    terms: tuple
    kind = "composite"

    @property
    def is_zero(self) -> bool:
        return all(c == 0 or d.is_zero for c, _, d in self.terms)

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        out = np.zeros_like(lam)
        for c, pw, d in self.terms:
            if c == 0 or d.is_zero:
                continue
            out = out + float(c) * lam ** (2 * pw) * d(lam)
        return out

    def reduced(self, lam, n: int, mu: int) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        out = np.zeros_like(lam)
        for c, pw, d in self.terms:
            if c == 0 or d.is_zero:
                continue
            out = out + float(c) * lam ** (2 * pw) * d.reduced(lam, n, mu)
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "composite",
            "terms": [{"coef": _jsonable(c), "power": pw, "density": d.to_dict()} for c, pw, d in self.terms],
        }


@dataclass(frozen=True)
class CallableDensity(Density):
    """Arbitrary vectorised callable; used for tests and ad hoc models."""

    fn: Callable = field(compare=False)
    n: int = 0
    mu: int = 1
    kind = "callable"

    def __call__(self, lam) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(lam, dtype=float)), dtype=float)

    def to_dict(self) -> dict:
        raise ValidationError("callable densities cannot be serialised")


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else x.numerator
    return x


def density_from_dict(d: dict) -> Density:
    kind = d.get("kind")
    if kind == "rational":
        return RationalDensity(
            num=tuple(d.get("num", (1,))),
            den=tuple(d.get("den", (1,))),
            scale=d.get("scale", 1),
            n=int(d.get("n", 0)),
            mu=int(d.get("mu", 1)),
        )
    if kind == "ar":
        return RationalDensity.ar(d["phi"], scale=d.get("scale", 1), n=int(d.get("n", 0)), mu=int(d.get("mu", 1)))
    if kind == "zero":
        return ZERO
    if kind == "grid":
        return GridDensity(np.asarray(d["values"], dtype=float))
    if kind == "composite":
        return CompositeDensity(
            tuple((_exact(t["coef"]), int(t["power"]), density_from_dict(t["density"])) for t in d["terms"])
        )
    raise ValidationError(f"unknown density kind {kind!r}")


# ---------------------------------------------------------------------------
# observation model


SIGNAL_PLUS_NOISE = "signal+noise"
NOISE_FREE = "noise-free"
COINTEGRATED = "cointegrated"


@dataclass(frozen=True)
class ObservationModel:
    """Signal density ``f``, noise ``g`` and, for cointegrated pairs, the
    observed density ``p`` with coefficient ``beta``.

    ``remainder`` optionally carries the density of the stationary part
    ``(p - beta^2 f) / lam^{2n}`` of a cointegrated pair; when present it is
    used directly instead of being recovered by subtraction.
    """

    spec: IncrementSpec
    f: Density
    g: Density = ZERO
    mode: str = SIGNAL_PLUS_NOISE
    p: Density | None = None
    beta: object = 1
    remainder: Density | None = None

    def __post_init__(self):
        if self.mode not in (SIGNAL_PLUS_NOISE, NOISE_FREE, COINTEGRATED):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.mode == COINTEGRATED:
            if self.p is None:
                raise ValidationError("cointegrated model needs p")
            if self.beta == 0:
                raise ValidationError("beta must be nonzero")
        for d in (self.f, self.g, self.p, self.remainder):
            if d is not None and d.n not in (0, self.spec.n) and d.kind == "rational":
                raise ValidationError("density increment order does not match the model")

    @classmethod
    def noise_free(cls, spec, f):
        return cls(spec, f, ZERO, NOISE_FREE)

    @classmethod
    def signal_plus_noise(cls, spec, f, g):
        return cls(spec, f, g, NOISE_FREE if g.is_zero else SIGNAL_PLUS_NOISE)

    @classmethod
    def cointegrated(cls, spec, f, p, beta):
        return cls(spec, f, ZERO, COINTEGRATED, p=p, beta=_exact(beta))

    @classmethod
    def cointegrated_from_remainder(cls, spec, f, remainder, beta):
        """Cointegrated pair with ``p = beta^2 f + lam^{2n} remainder``."""
        b = _exact(beta)
        p = CompositeDensity(((b * b, 0, f), (1, spec.n, remainder)))
        return cls(spec, f, ZERO, COINTEGRATED, p=p, beta=b, remainder=remainder)

    @property
    def cointegrated_mode(self) -> bool:
        return self.mode == COINTEGRATED

    def densities(self):
        out = [self.f, self.g]
        if self.p is not None:
            out.append(self.p)
        if self.remainder is not None:
            out.append(self.remainder)
        return [d for d in out if not d.is_zero]

    def common_grid(self) -> int | None:
        """Grid size if every nonzero density is grid-tabulated on one grid."""
        ds = self.densities()
        if ds and all(isinstance(d, GridDensity) for d in ds):
            sizes = {d.M for d in ds}
            if len(sizes) == 1:
                return sizes.pop()
        return None

    # reduced quantities ------------------------------------------------------

    def psi_f(self, lam) -> np.ndarray:
        return self.f.reduced(lam, self.spec.n, self.spec.mu)

    def noise(self, lam) -> np.ndarray:
        """``g``, or ``(p - beta^2 f)/lam^{2n}`` for a cointegrated pair."""
        if not self.cointegrated_mode:
            return np.zeros_like(np.asarray(lam, dtype=float)) if self.g.is_zero else self.g(lam)
        if self.remainder is not None:
            return self.remainder(lam)
        lam = np.asarray(lam, dtype=float)
        E = increment_power(lam, self.spec)
        b2 = float(self.beta) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.psi_p(lam) - b2 * self.psi_f(lam)) / E

    def psi_p(self, lam) -> np.ndarray:
        """Reduced density of the observed sequence."""
        if self.cointegrated_mode:
            return self.p.reduced(lam, self.spec.n, self.spec.mu)
        out = self.psi_f(lam)
        if not self.g.is_zero:
            out = out + increment_power(lam, self.spec) * self.g(lam)
        return out

    def signal_weight(self) -> float:
        """``beta^2`` (1 outside the cointegrated case)."""
        return float(self.beta) ** 2 if self.cointegrated_mode else 1.0

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "f": self.f.to_dict(), "g": self.g.to_dict()}
        if self.cointegrated_mode:
            out["beta"] = _jsonable(self.beta)
            if self.remainder is not None:
                out["remainder"] = self.remainder.to_dict()
            else:
                out["p"] = self.p.to_dict()
        return out


def reduced_integrand(model: ObservationModel) -> Callable:
    """Evaluator of ``lam^{2n} / (|1 - e^{i lam mu}|^{2n} p(lam))``, i.e. ``1/psi_p``."""

    def r(lam):
        psi = model.psi_p(lam)
        if np.any(psi <= 0):
            bad = np.asarray(lam, dtype=float)[psi <= 0]
            raise PoleError(f"observed density vanishes at lambda={float(bad.ravel()[0])!r}")
        return 1.0 / psi

    return r


@dataclass(frozen=True)
class MinimalityResult:
    satisfied: bool
    integral: float
    divergent: bool = False
    converged: bool = True
    exact: object = None


def _reduced_rational(model: ObservationModel):
    d = model.p if model.cointegrated_mode else model.f
    if isinstance(d, RationalDensity) and d.n == model.spec.n and d.mu == model.spec.mu:
        return d
    return None


def minimality_check(model: ObservationModel, tol: float = 1e-10, max_grid: int = 2**20) -> MinimalityResult:
    """Check that ``int 1/psi_p dlam`` is finite and estimate it."""
    rat = _reduced_rational(model)
    if rat is not None and rat.psi_bounded_below() and (model.cointegrated_mode or model.g.is_zero):
        coeffs = rat.reciprocal_coefficients()
        if coeffs is not None:
            exact = 2 * coeffs[0]
            return MinimalityResult(True, float(exact) * np.pi, exact=exact * Fraction(1))
    if rat is not None and not rat.psi_bounded_below() and (model.cointegrated_mode or model.g.is_zero):
        # a zero of |num|^2 on the circle is at least quadratic: 1/psi is not integrable
        return MinimalityResult(False, float("inf"), divergent=True)
    if rat is not None and rat.psi_bounded_below() and not model.cointegrated_mode:
        # psi_p >= psi_f > 0: finite, only the value needs quadrature
        bounded = True
    else:
        bounded = False

    M = model.common_grid()
    if M is not None:
        lam = midpoint_grid(M)
        psi = model.psi_p(lam)
        if np.any(psi <= 0):
            return MinimalityResult(False, float("inf"), divergent=True)
        return MinimalityResult(True, float(2 * np.pi * np.mean(1.0 / psi)))

    prev = None
    M = DEFAULT_GRID
    while M <= max_grid:
        lam = midpoint_grid(M)
        psi = model.psi_p(lam)
        if np.any(~np.isfinite(psi)) or np.any(psi <= 0):
            return MinimalityResult(False, float("inf"), divergent=True)
        est = float(2 * np.pi * np.mean(1.0 / psi))
        if prev is not None and abs(est - prev) <= tol * max(abs(est), 1.0):
            return MinimalityResult(True, est)
        if prev is not None and not bounded and est > 1.8 * prev and M >= 4 * DEFAULT_GRID:
            # growth under refinement: mass concentrating at zeros of psi_p
            return MinimalityResult(False, float("inf"), divergent=True, converged=False)
        prev = est
        M *= 2
    return MinimalityResult(bounded, prev, divergent=False, converged=False)


def require_minimality(model: ObservationModel, tol: float = 1e-10) -> MinimalityResult:
    res = minimality_check(model, tol)
    if res.divergent:
        raise MinimalityError("minimality integral diverges")
    if not res.satisfied:
        raise QuadratureError("minimality integral did not converge", float("nan"))
    return res
