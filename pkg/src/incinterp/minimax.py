"""Least favorable densities and minimax-robust characteristics.

All densities are handled in raw (non-reduced) form on the midpoint grid.
With ``s = lam^{2n}``, ``e = |1 - e^{i lam mu}|^n``,
``a = A(e^{i lam}) (1 - e^{i lam mu})^n`` and ``p = f + s g``, the error of a
fixed characteristic (coefficients ``C``) under densities ``(f, g)`` is

    Delta(h_C; f, g) = mean( h_g^2 g + h_f^2 f ),
    h_g = |a f0 - s C| / (e p0),    h_f = |lam|^n |a g0 + C| / (e p0),

where ``(f0, g0)`` are the densities ``C`` was built from. The stationarity
relations for each admissible class are solved pointwise for fixed ``C`` and
fixed multipliers; the multipliers are set by bracketing so that the active
constraints hold; the outer loop is a damped fixed point on ``C``.

Multiplier conventions (relations as implemented):

* lower-reciprocal class: ``f0 h_f = alpha1``, ``g0 h_g = alpha2``;
* epsilon class: ``h_f^2 = alpha1 (f0 - f1)``, ``h_g^2 = alpha2 gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .errors import InfeasibleClassError, NumericalError, ValidationError
from .increments import FunctionalSpec, IncrementSpec
from .interpolator import InterpolationSolution, solve, solve_cointegrated
from .spectral import Density, GridDensity, ObservationModel, midpoint_grid

LOWER_RECIPROCAL = "lower-reciprocal"
EPSILON = "epsilon"


@dataclass(frozen=True, eq=False)
class DensityClass:
    """Admissible set for ``(f, g)``, or ``(f, p)`` when ``beta`` is set.

    A component is free when its constraint parameter is given (``P1``/``eps1``
    for ``f``, ``P2``/``eps2`` for the second); otherwise it is fixed to the
    supplied density. For the epsilon class the supplied densities are the
    centres ``f1``, ``g1`` (or ``p1``).
    """

    kind: str
    f: Density | None = None
    g: Density | None = None
    P1: float | None = None
    P2: float | None = None
    eps1: float | None = None
    eps2: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in (LOWER_RECIPROCAL, EPSILON):
            raise ValidationError(f"unknown class kind {self.kind!r}")
        c1, c2 = ("P1", "P2") if self.kind == LOWER_RECIPROCAL else ("eps1", "eps2")
        for name in (c1, c2):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InfeasibleClassError(f"{name} must be positive, got {v}")
        if not (self.free_f or self.free_g):
            raise ValidationError("class has no free component")
        if self.kind == EPSILON:
            if self.f is None or self.g is None:
                raise ValidationError("epsilon class needs both reference densities")
        else:
            if not self.free_f and self.f is None:
                raise ValidationError("fixed f must be supplied")
            if not self.free_g and self.g is None:
                raise ValidationError(f"fixed {self.second} must be supplied")
            if self.cointegrated and self.free_g:
                raise ValidationError(
                    "lower-reciprocal cointegrated class: p must be known (its stationarity condition does not involve p)"
                )
        if self.beta is not None and float(self.beta) == 0:
            raise ValidationError("beta must be nonzero")

    @classmethod
    def lower_reciprocal(cls, P1=None, P2=None, f=None, g=None, beta=None):
        return cls(LOWER_RECIPROCAL, f, g, P1=P1, P2=P2, beta=beta)

    @classmethod
    def eps_neighborhood(cls, f1, g1, eps1=None, eps2=None, beta=None):
        return cls(EPSILON, f1, g1, eps1=eps1, eps2=eps2, beta=beta)

    @property
    def free_f(self) -> bool:
        return (self.P1 if self.kind == LOWER_RECIPROCAL else self.eps1) is not None

    @property
    def free_g(self) -> bool:
        return (self.P2 if self.kind == LOWER_RECIPROCAL else self.eps2) is not None

    @property
    def cointegrated(self) -> bool:
        return self.beta is not None

    @property
    def second(self) -> str:
        return "p" if self.cointegrated else "g"

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for k in ("P1", "P2", "eps1", "eps2", "beta"):
            v = getattr(self, k)
            if v is not None:
                out[k] = float(v)
        if self.f is not None:
            out["f"] = self.f.to_dict()
        if self.g is not None:
            out[self.second] = self.g.to_dict()
        return out


@dataclass(frozen=True)
class MinimaxOptions:
    grid: int = 1024
    tol: float = 1e-6
    theta: float = 0.5
    max_iter: int = 500
    #: cap for densities whose closed form blows up (inverse of a nonpositive bracket)
    ceiling: float = 1e6
    polish: bool = True
    #: cointegrated only: use the beta-rescaled error functional
    rescale: bool = False

    def __post_init__(self):
        if self.grid < 512:
            raise ValidationError("minimax grid must have at least 512 points")
        if not 0 < self.theta <= 1:
            raise ValidationError("damping must lie in (0, 1]")
        if self.max_iter < 1 or self.tol <= 0:
            raise ValidationError("invalid iteration options")


# ---------------------------------------------------------------------------
# grid workspace


class _Workspace:
    def __init__(self, spec: IncrementSpec, func: FunctionalSpec, cls: DensityClass, opts: MinimaxOptions):
        self.spec, self.func, self.cls, self.opts = spec, func, cls, opts
        self._cache = {}
        M = opts.grid
        lam = midpoint_grid(M)
        self.lam = lam
        self.s = lam ** (2 * spec.n)
        self.absn = np.abs(lam) ** spec.n
        one_minus = 1 - np.exp(1j * lam * spec.mu)
        self.e = np.abs(one_minus) ** spec.n
        z = np.exp(1j * lam)
        A = sum(float(x) * z**k for k, x in enumerate(func.a))
        self.a = A * one_minus**spec.n
        self.zpow = np.exp(1j * np.outer(np.arange(spec.dim), lam))
        self.beta = None if cls.beta is None else float(cls.beta)
        if self.beta is not None:
            b2 = self.beta**2
            self.kp, self.kf = (1 / b2, 1.0) if opts.rescale else (1.0, b2)

    def sample(self, d: Density) -> np.ndarray:
        key = id(d)
        if key in self._cache:
            return self._cache[key][1]
        v = np.asarray(d(self.lam), dtype=float)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValidationError("reference density must be finite and nonnegative on the grid")
        self._cache[key] = (d, v)  # keep d alive so its id stays unique
        return v

    def C(self, c) -> np.ndarray:
        c = np.asarray(c)
        if np.iscomplexobj(c):
            if np.max(np.abs(c.imag), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(c))):
                raise NumericalError("characteristic coefficients have a nonzero imaginary part")
            c = c.real
        return c.astype(float) @ self.zpow

    # standard case
    def u(self, f, Cv):
        return np.abs(self.a * f - self.s * Cv) / self.e

    def v(self, g, Cv):
        return self.absn * np.abs(self.a * g + Cv) / self.e

    # cointegrated case
    def u_beta(self, f, Cv):
        return np.abs(self.a * self.beta**2 * f - self.s * Cv) / self.e

    def v_beta(self, f, p, Cv):
        return np.abs(self.a * np.maximum(p - self.beta**2 * f, 0.0) + self.s * Cv) / self.e

    def weights(self, f, g, Cv):
        """``(W_f, W_g)``: pointwise coefficients of the linear error functional."""
        if self.beta is None:
            p = f + self.s * g
            return (self.v(g, Cv) / p) ** 2, (self.u(f, Cv) / p) ** 2
        sp2 = self.s * g**2
        W1 = self.u_beta(f, Cv) ** 2 / sp2
        W3 = self.v_beta(f, g, Cv) ** 2 / sp2
        return W3 - self.kf * W1, self.kp * W1

    def model(self, f, g) -> ObservationModel:
        F = GridDensity(f)
        if self.beta is None:
            return ObservationModel.signal_plus_noise(self.spec, F, GridDensity(g))
        return ObservationModel.cointegrated(self.spec, F, GridDensity(g), self.cls.beta)

    def solve(self, f, g) -> InterpolationSolution:
        m = self.model(f, g)
        if self.beta is None:
            return solve(m, self.func)
        return solve_cointegrated(m, self.func, rescale=self.opts.rescale)


def _bracket_root(fun, x0=0.0, step=2.0, limit=200.0):
    """Root of a monotone function of a log-parameter by expanding then brentq."""
    lo = hi = x0
    flo = fhi = fun(x0)
    if flo == 0:
        return x0
    for _ in range(int(limit / step)):
        lo, hi = lo - step, hi + step
        flo, fhi = fun(lo), fun(hi)
        if np.sign(flo) != np.sign(fhi):
            break
    else:
        raise InfeasibleClassError(
            "could not bracket the multiplier for an active constraint "
            f"(constraint excess {flo:.3g} at the small end, {fhi:.3g} at the large end)"
        )
    # tighten the bracket around x0 side for brentq
    return optimize.brentq(fun, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)


def _largest_root(phi, hi, n_scan=96):
    """Largest ``x`` in ``[0, hi]`` with ``phi`` crossing from + to -, per column.

    Returns ``(x, found)``; columns without a crossing get ``x = 0``.
    """
    hi = np.asarray(hi, dtype=float).copy()
    for _ in range(60):
        bad = phi(hi[None, :])[0] > 0
        if not np.any(bad):
            break
        hi[bad] *= 2
    t = np.linspace(0.0, 1.0, n_scan) ** 2
    xs = t[:, None] * hi[None, :]
    vals = phi(xs)
    cross = (vals[:-1] > 0) & (vals[1:] <= 0)
    found = np.any(cross, axis=0)
    idx = n_scan - 2 - np.argmax(cross[::-1], axis=0)
    cols = np.arange(hi.size)
    lo, up = xs[idx, cols], xs[idx + 1, cols]
    for _ in range(80):
        mid = 0.5 * (lo + up)
        pos = phi(mid[None, :])[0] > 0
        lo = np.where(pos, mid, lo)
        up = np.where(pos, up, mid)
    x = np.where(found, 0.5 * (lo + up), 0.0)
    return x, found


def _quadratic_largest(A, B, C, lo, hi):
    """Largest real root of ``A x^2 + B x + C`` in ``[lo, hi]``, ``nan`` where none."""
    disc = B * B - 4 * A * C
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        q = -0.5 * (B + np.where(B >= 0, sq, -sq))
        r1 = np.where(A != 0, q / A, np.nan)
        r2 = np.where(q != 0, C / q, np.nan)
    ok1 = (r1 >= lo) & (r1 <= hi)
    ok2 = (r2 >= lo) & (r2 <= hi)
    return np.fmax(np.where(ok1, r1, np.nan), np.where(ok2, r2, np.nan))


def _cubic_excess(b, r):
    """Root ``x >= 0`` of ``x (x + b)^2 = r`` (``b, r >= 0``), Cardano plus Newton polish."""
    # y = x + b solves y^3 - b y^2 - r = 0; shift y = t + b/3
    q = -2 * b**3 / 27 - r
    disc = r * b**3 / 27 + r * r / 4
    sq = np.sqrt(disc)
    t = np.cbrt(-q / 2 + sq) + np.cbrt(-q / 2 - sq)
    x = np.maximum(t + b / 3 - b, 0.0)
    for _ in range(3):
        F = x * (x + b) ** 2 - r
        dF = (x + b) * (3 * x + b)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.maximum(x - np.where(dF > 0, F / dF, 0.0), 0.0)
    return x


# ---------------------------------------------------------------------------
# pointwise updates for fixed C; each returns (density, multiplier, extra)


class _Updates:
    def __init__(self, ws: _Workspace):
        self.ws = ws
        cls = ws.cls
        if cls.kind == EPSILON:
            self.f1 = ws.sample(cls.f)
            self.g1 = ws.sample(cls.g)
        else:
            self.f_known = None if cls.free_f else ws.sample(cls.f)
            self.g_known = None if cls.free_g else ws.sample(cls.g)

    # -- lower-reciprocal, standard
    def g_lower(self, f, Cv, alpha):
        ws = self.ws
        u = ws.u(f, Cv)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.maximum((u - alpha * ws.s) / (alpha * f), 1.0 / ws.opts.ceiling)
        return 1.0 / inv, inv <= 1.0 / ws.opts.ceiling * (1 + 1e-12)

    def f_lower(self, g, Cv, alpha):
        ws = self.ws
        v = ws.v(g, Cv)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.maximum((v - alpha) / (alpha * ws.s * g), 1.0 / ws.opts.ceiling)
        return 1.0 / inv, inv <= 1.0 / ws.opts.ceiling * (1 + 1e-12)

    # -- epsilon, standard
    def f_eps(self, g, Cv, alpha):
        ws = self.ws
        v = ws.v(g, Cv)
        x = _cubic_excess(self.f1 + ws.s * g, v**2 / alpha)
        return self.f1 + x, np.zeros(x.shape, bool)

    def g_eps(self, f, Cv, alpha):
        ws = self.ws
        kappa = 1.0 / np.sqrt(alpha)
        g = np.maximum(self.g1, (kappa * ws.u(f, Cv) - f) / ws.s)
        return g, np.zeros(g.shape, bool)

    # -- cointegrated
    def p_eps_coint(self, f, Cv, alpha):
        ws = self.ws
        p = np.maximum(self.g1, np.sqrt(ws.kp / alpha) * ws.u_beta(f, Cv) / np.sqrt(ws.s))
        return p, np.zeros(p.shape, bool)

    def _wf(self, p, Cv):
        ws = self.ws

        def wf(x):
            W1 = ws.u_beta(x, Cv) ** 2 / (ws.s * p**2)
            W3 = ws.v_beta(x, p, Cv) ** 2 / (ws.s * p**2)
            return W3 - ws.kf * W1

        return wf

    def f_eps_coint(self, p, Cv, alpha):
        # W_f is |linear|^2 - kf |linear|^2 in f on each side of the cap p / beta^2,
        # so W_f(x) - alpha (x - f1) = 0 is a quadratic on each piece
        ws = self.ws
        b2 = ws.beta**2
        cap = p / b2
        D = ws.e**2 * ws.s * p**2
        z1, z0 = ws.a * b2, -ws.s * Cv          # u_beta e = |z1 x + z0|
        w1, w0 = -ws.a * b2, ws.a * p + ws.s * Cv  # v_beta e = |w1 x + w0| below the cap
        uu = (np.abs(z1) ** 2, 2 * np.real(z1 * np.conj(z0)), np.abs(z0) ** 2)
        vv = (np.abs(w1) ** 2, 2 * np.real(w1 * np.conj(w0)), np.abs(w0) ** 2)
        sc = np.abs(ws.s * Cv) ** 2
        kf = ws.kf
        above = _quadratic_largest(
            -kf * uu[0] / D, -kf * uu[1] / D - alpha, (sc - kf * uu[2]) / D + alpha * self.f1, cap, np.inf
        )
        below = _quadratic_largest(
            (vv[0] - kf * uu[0]) / D, (vv[1] - kf * uu[1]) / D - alpha,
            (vv[2] - kf * uu[2]) / D + alpha * self.f1, 0.0, cap,
        )
        x = np.where(np.isfinite(above), above, below)
        found = np.isfinite(x)
        return np.where(found, x, 0.0), ~found

    def f_lower_coint(self, p, Cv, alpha):
        ws = self.ws
        wf = self._wf(p, Cv)
        phi = lambda x: x**2 * wf(x) - alpha
        cap = p / ws.beta**2  # the remainder p - beta^2 f must stay nonnegative
        at_cap = phi(cap[None, :])[0] > 0
        x, found = _largest_root(phi, cap)
        x = np.where(at_cap, cap, np.where(found, np.minimum(x, cap), 1.0 / ws.opts.ceiling))
        return x, ~(found | at_cap)


def _constraint(ws: _Workspace, which: str, x: np.ndarray) -> float:
    """Constraint functional minus its bound (zero when active)."""
    cls = ws.cls
    if cls.kind == LOWER_RECIPROCAL:
        P = cls.P1 if which == "f" else cls.P2
        return float(np.mean(1.0 / x)) - P
    if which == "f":
        return float(np.mean((x - ws.sample(cls.f)) ** 2)) - cls.eps1
    return float(np.mean(np.abs(x - ws.sample(cls.g)))) - cls.eps2


@dataclass
class _State:
    f: np.ndarray
    g: np.ndarray
    alpha1: float = 0.0
    alpha2: float = 0.0
    clamped: np.ndarray | None = None


class _Responder:
    """Densities solving the class relations for a given ``C``."""

    def __init__(self, ws: _Workspace):
        self.ws = ws
        self.up = _Updates(ws)
        cls = ws.cls
        co = cls.cointegrated
        if cls.kind == LOWER_RECIPROCAL:
            self.fn_f = self.up.f_lower_coint if co else self.up.f_lower
            self.fn_g = self.up.g_lower
        else:
            self.fn_f = self.up.f_eps_coint if co else self.up.f_eps
            self.fn_g = self.up.p_eps_coint if co else self.up.g_eps
        self._log_alpha = {"f": 0.0, "g": 0.0}

    def initial(self) -> _State:
        ws, cls = self.ws, self.ws.cls
        M = ws.lam.size
        if cls.kind == LOWER_RECIPROCAL and cls.cointegrated:
            floor = float(np.mean(ws.beta**2 / self.up.g_known))
            if floor > cls.P1:
                raise InfeasibleClassError(
                    f"P1={cls.P1} is below mean(beta^2/p)={floor:.6g}; no admissible f has a nonnegative remainder"
                )
            f = (floor / cls.P1) * self.up.g_known / ws.beta**2
            return _State(f, self.up.g_known.copy())
        if cls.kind == EPSILON:
            return _State(self.up.f1.copy(), self.up.g1.copy())
        f = np.full(M, 1.0 / cls.P1) if cls.free_f else self.up.f_known
        g = np.full(M, 1.0 / cls.P2) if cls.free_g else self.up.g_known
        return _State(f.copy(), g.copy())

    def _fit(self, which, other, Cv):
        fn = self.fn_f if which == "f" else self.fn_g
        ws = self.ws
        # constraint value is monotone in log(alpha) for every class
        target = lambda la: _constraint(ws, which, fn(other, Cv, np.exp(la))[0])
        la = _bracket_root(target, self._log_alpha[which])
        self._log_alpha[which] = la
        x, clamped = fn(other, Cv, np.exp(la))
        return x, float(np.exp(la)), clamped

    def respond(self, c, start: _State, sweeps: int = 200) -> _State:
        """Solve the relations for ``C``; with both components free, alternate
        up to ``sweeps`` times starting from ``start``."""
        ws, cls = self.ws, self.ws.cls
        Cv = ws.C(c)
        f, g = start.f, start.g
        a1, a2 = start.alpha1, start.alpha2
        cf = cg = np.zeros(f.shape, bool)
        if not (cls.free_f and cls.free_g):
            sweeps = 1
        for _ in range(sweeps):
            f_old, g_old = f, g
            if cls.free_f:
                f, a1, cf = self._fit("f", g, Cv)
            if cls.free_g:
                g, a2, cg = self._fit("g", f, Cv)
            if sweeps == 1:
                break
            ch = max(np.max(np.abs(f - f_old)) / max(np.max(f), 1e-300),
                     np.max(np.abs(g - g_old)) / max(np.max(g), 1e-300))
            if ch < 1e-14:
                break
        return _State(f, g, a1, a2, cf | cg)

    def with_alpha(self, c, start: _State, alpha1=None, alpha2=None) -> _State:
        """Relations with prescribed multipliers (no constraint fitting)."""
        ws, cls = self.ws, self.ws.cls
        Cv = ws.C(c)
        f, g = start.f, start.g
        a1 = start.alpha1 if alpha1 is None else alpha1
        a2 = start.alpha2 if alpha2 is None else alpha2
        cf = cg = np.zeros(f.shape, bool)
        for _ in range(200 if cls.free_f and cls.free_g else 1):
            if cls.free_f:
                f, cf = self.fn_f(g, Cv, a1)
            if cls.free_g:
                g, cg = self.fn_g(f, Cv, a2)
        return _State(f, g, a1, a2, cf | cg)


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True, eq=False)
class LeastFavorablePair:
    cls: DensityClass
    spec: IncrementSpec
    func: FunctionalSpec
    f0: GridDensity
    g0: GridDensity
    alpha1: float
    alpha2: float
    gamma: np.ndarray | None
    residuals: dict
    robust_solution: InterpolationSolution | None
    iterations: int
    converged: bool
    objective: float
    history: tuple = ()
    boundary_active: bool = False
    bounded: dict = field(default_factory=dict)
    ascent: bool = True
    options: MinimaxOptions = MinimaxOptions()

    @property
    def p0(self) -> GridDensity:
        """Observed density: ``f0 + lam^{2n} g0``, or ``g0`` itself when cointegrated."""
        if self.cls.cointegrated:
            return self.g0
        s = self.f0.grid ** (2 * self.spec.n)
        return GridDensity(self.f0.values + s * self.g0.values)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _relation_residuals(ws: _Workspace, st: _State, c) -> tuple[dict, np.ndarray | None]:
    cls = ws.cls
    Cv = ws.C(c)
    f, g = st.f, st.g
    free = ~st.clamped if st.clamped is not None else np.ones(f.shape, bool)
    out = {}
    gamma = None
    Wf, Wg = ws.weights(f, g, Cv)
    if cls.kind == LOWER_RECIPROCAL:
        if cls.free_f:
            r = np.abs(f**2 * Wf - st.alpha1) / st.alpha1 if cls.cointegrated else np.abs(f * np.sqrt(Wf) - st.alpha1) / st.alpha1
            out["relation_f"] = float(np.max(r[free], initial=0.0))
        if cls.free_g:
            r = np.abs(g * np.sqrt(Wg) - st.alpha2) / st.alpha2
            out["relation_g"] = float(np.max(r[free], initial=0.0))
    else:
        f1, g1 = ws.sample(cls.f), ws.sample(cls.g)
        if cls.free_f:
            r = np.abs(Wf - st.alpha1 * (f - f1))
            out["relation_f"] = float(np.max(r[free], initial=0.0) / max(np.max(np.abs(Wf)), 1e-300))
        if cls.free_g:
            gamma = Wg / st.alpha2
            supp = g > g1 + 1e-12 * max(1.0, float(np.max(g1)))
            out["relation_g"] = float(max(np.max(np.abs(gamma[supp] - 1), initial=0.0),
                                          np.max(gamma[~supp] - 1, initial=0.0)))
            out["gamma_bound"] = float(max(np.max(np.abs(gamma)) - 1, 0.0))
    if cls.free_f:
        ref = cls.P1 if cls.kind == LOWER_RECIPROCAL else cls.eps1
        out["constraint_f"] = abs(_constraint(ws, "f", f)) / ref
    if cls.free_g:
        ref = cls.P2 if cls.kind == LOWER_RECIPROCAL else cls.eps2
        out["constraint_g"] = abs(_constraint(ws, "g", g)) / ref
    return out, gamma


def _rel_change(x, y) -> float:
    return float(np.max(np.abs(x - y)) / max(float(np.max(np.abs(y))), 1e-300))


def _objective(ws: _Workspace, st: _State, c) -> float:
    Wf, Wg = ws.weights(st.f, st.g, ws.C(c))
    return float(np.mean(Wf * st.f + Wg * st.g))


def _trivial_pair(ws, cls, spec, func, opts, resp) -> LeastFavorablePair:
    st = resp.initial()
    sol = ws.solve(st.f, st.g)
    return LeastFavorablePair(cls, spec, func, GridDensity(st.f), GridDensity(st.g), 0.0, 0.0, None,
                              {}, sol, 0, True, 0.0, (0.0,), False, {}, True, opts)


def least_favorable(cls: DensityClass, spec: IncrementSpec, func: FunctionalSpec,
                    options: MinimaxOptions | None = None) -> LeastFavorablePair:
    """Least favorable pair in ``cls`` by damped fixed-point iteration on ``C``."""
    opts = options or MinimaxOptions()
    if func.N != spec.N:
        raise ValidationError("functional length does not match the gap")
    ws = _Workspace(spec, func, cls, opts)
    resp = _Responder(ws)
    if func.is_zero:
        return _trivial_pair(ws, cls, spec, func, opts, resp)

    st = resp.initial()
    sol = ws.solve(st.f, st.g)
    c = sol.c.copy()
    st = resp.respond(c, st, sweeps=1)
    sol = ws.solve(st.f, st.g)
    obj = _objective(ws, st, sol.c)
    history = [obj]
    ascent = True
    it = 0
    fp = np.inf
    for it in range(1, opts.max_iter + 1):
        c_new = sol.c
        fp = float(np.max(np.abs(c_new - c)) / max(1.0, np.max(np.abs(c_new))))
        step = opts.theta
        for _ in range(7):
            c_try = c + step * (c_new - c)
            st_try = resp.respond(c_try, st, sweeps=1)
            sol_try = ws.solve(st_try.f, st_try.g)
            obj_try = _objective(ws, st_try, sol_try.c)
            if obj_try >= obj - 1e-12 * abs(obj):
                break
            step /= 2  # reject: objective went down
        else:
            # no ascent step exists along this direction; keep the plain damped step
            ascent = False
            c_try = c + opts.theta * (c_new - c)
            st_try = resp.respond(c_try, st, sweeps=1)
            sol_try = ws.solve(st_try.f, st_try.g)
            obj_try = _objective(ws, st_try, sol_try.c)
        moved = max(_rel_change(st_try.f, st.f), _rel_change(st_try.g, st.g))
        c, st, sol, obj = c_try, st_try, sol_try, obj_try
        history.append(obj)
        if fp < 1e-3 * opts.tol and moved < opts.tol:
            break

    if opts.polish and fp >= 1e-3 * opts.tol:
        def F(x):
            s1 = resp.respond(x, st)
            return ws.solve(s1.f, s1.g).c - x
        try:
            r = optimize.root(F, c, method="hybr", tol=1e-13)
            if np.max(np.abs(r.fun)) < np.max(np.abs(F(c))):
                st_p = resp.respond(r.x, st)
                sol_p = ws.solve(st_p.f, st_p.g)
                obj_p = _objective(ws, st_p, sol_p.c)
                if obj_p < obj - 1e-12 * abs(obj):
                    ascent = False
                c, st, sol, obj = r.x, st_p, sol_p, obj_p
                history.append(obj)
        except (NumericalError, ValueError):
            pass

    return _finish(ws, resp, st, sol, c, it, tuple(history), ascent)


def _finish(ws, resp, st, sol, c, iterations, history, ascent) -> LeastFavorablePair:
    cls, opts = ws.cls, ws.opts
    res, gamma = _relation_residuals(ws, st, sol.c)
    res["fixed_point"] = float(np.max(np.abs(sol.c - c)) / max(1.0, float(np.max(np.abs(sol.c)))))
    Cv = ws.C(sol.c)
    Wf, Wg = ws.weights(st.f, st.g, Cv)
    bounded = {"sup_h_f": float(np.sqrt(np.max(np.abs(Wf)))), "sup_h_g": float(np.sqrt(np.max(np.abs(Wg))))}
    if cls.cointegrated:
        # (p0 - beta^2 f0) / lam^{2n} must stay integrable; a peak at the origin that
        # grows with the grid signals an unbounded problem rather than a solution
        rem = np.maximum(st.g - ws.beta**2 * st.f, 0.0) / ws.s
        bounded["remainder_peak_ratio"] = float(np.max(rem) / max(float(np.median(rem)), 1e-300))
    obj = _objective(ws, st, sol.c)
    boundary = bool(st.clamped is not None and np.any(st.clamped))
    # ascent check against the predecessor iterate only
    last_up = len(history) < 2 or history[-1] >= history[-2] - 1e-12 * abs(history[-2])
    converged = all(v < opts.tol for v in res.values()) and last_up
    return LeastFavorablePair(cls, ws.spec, ws.func, GridDensity(st.f), GridDensity(st.g),
                              st.alpha1, st.alpha2, gamma, res, sol, iterations, converged, obj,
                              history, boundary, bounded, ascent, opts)


def least_favorable_cointegrated(cls: DensityClass, spec: IncrementSpec, func: FunctionalSpec,
                                 options: MinimaxOptions | None = None) -> LeastFavorablePair:
    """Least favorable ``(f0, p0)`` for a cointegrated pair; ``cls.beta`` must be set."""
    if not cls.cointegrated:
        raise ValidationError("class has no beta; use least_favorable")
    return least_favorable(cls, spec, func, options)


def perturbed_pair(pair: LeastFavorablePair, alpha1: float | None = None, alpha2: float | None = None) -> LeastFavorablePair:
    """Densities from the relations with the multipliers replaced (negative control)."""
    ws = _Workspace(pair.spec, pair.func, pair.cls, pair.options)
    resp = _Responder(ws)
    c = pair.robust_solution.c
    st0 = _State(pair.f0.values.copy(), pair.g0.values.copy(), pair.alpha1, pair.alpha2)
    st = resp.with_alpha(c, st0, alpha1, alpha2)
    sol = ws.solve(st.f, st.g)
    return _finish(ws, resp, st, sol, c, pair.iterations, pair.history, pair.ascent)


# ---------------------------------------------------------------------------
# saddle-point check


def delta_under(h_from: LeastFavorablePair | InterpolationSolution, f: Density, g: Density,
                f0: Density | None = None, g0: Density | None = None) -> float:
    """Error of the characteristic built at ``(f0, g0)`` when the true densities are ``(f, g)``.

    ``h_from`` is either a pair (its robust solution and densities are used) or
    a solution on a grid model, in which case ``f0``/``g0`` default to the
    model's grid densities. Cointegrated pairs take ``(f, p)``.
    """
    if isinstance(h_from, LeastFavorablePair):
        pair = h_from
        ws = _Workspace(pair.spec, pair.func, pair.cls, pair.options)
        sol = pair.robust_solution
        F0, G0 = pair.f0.values, pair.g0.values
    else:
        sol = h_from
        m = sol.model
        beta = m.beta if m.cointegrated_mode else None
        second = (m.p if m.cointegrated_mode else m.g) if g0 is None else g0
        first = m.f if f0 is None else f0
        M = first.M if isinstance(first, GridDensity) else 1024
        dummy = DensityClass(EPSILON, first, second, eps1=1.0, beta=beta)
        rescale = beta is not None and float(sol.scale) != 1.0
        ws = _Workspace(m.spec, sol.func, dummy, MinimaxOptions(grid=M, rescale=rescale))
        F0, G0 = ws.sample(first), ws.sample(second)
    if sol.func.is_zero:
        return 0.0
    # the raw coefficients that multiply 1/psi_p (undo any rescaling)
    c = np.asarray(sol.c) / float(sol.scale)
    Wf, Wg = ws.weights(F0, G0, ws.C(c))
    fv, gv = ws.sample(f), ws.sample(g)
    return float(np.mean(Wf * fv + Wg * gv))


@dataclass(frozen=True)
class SaddleReport:
    samples: int
    violations: int
    max_violation: float
    delta0: float
    tol: float
    membership_ok: bool
    deltas: tuple = ()

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.membership_ok


def _smooth_direction(rng, M, lam, order=8):
    z = rng.standard_normal(order + 1) / (1 + np.arange(order + 1))
    r = np.cos(np.outer(np.arange(order + 1), lam)).T @ z
    return r / np.max(np.abs(r))


def sample_admissible(pair: LeastFavorablePair, rng: np.random.Generator, size: float = 0.2):
    """One random admissible ``(f, g)`` near the pair, projected back into the class."""
    cls = pair.cls
    lam = pair.f0.grid
    M = lam.size
    f, g = pair.f0.values.copy(), pair.g0.values.copy()
    t = rng.uniform(0, 1)
    if cls.kind == LOWER_RECIPROCAL:
        if cls.free_f:
            f = f * np.exp(size * t * _smooth_direction(rng, M, lam))
            f *= np.mean(1 / f) / cls.P1
        if cls.free_g:
            g = g * np.exp(size * t * _smooth_direction(rng, M, lam))
            g *= np.mean(1 / g) / cls.P2
        return f, g
    f1 = np.asarray(cls.f(lam), dtype=float)
    g1 = np.asarray(cls.g(lam), dtype=float)
    if cls.free_f:
        scale = np.sqrt(cls.eps1)
        f = np.maximum(f + size * t * scale * _smooth_direction(rng, M, lam), 0.0)
        ms = np.mean((f - f1) ** 2)
        if ms > cls.eps1:
            f = f1 + (f - f1) * np.sqrt(cls.eps1 / ms)
    if cls.free_g:
        bump = np.abs(_smooth_direction(rng, M, lam)) if rng.uniform() < 0.5 else _smooth_direction(rng, M, lam)
        g = np.maximum(g + size * t * cls.eps2 * bump, 0.0)
        l1 = np.mean(np.abs(g - g1))
        if l1 > cls.eps2:
            g = g1 + (g - g1) * (cls.eps2 / l1)
    return f, g


def verify_saddle(pair: LeastFavorablePair, samples: int = 100, seed: int = 0,
                  tol: float = 1e-6, size: float = 0.2) -> SaddleReport:
    """Check ``Delta(h0; f, g) <= Delta(h0; f0, g0) + tol`` on random admissible pairs."""
    if samples <= 0:
        return SaddleReport(0, 0, 0.0, pair.objective, tol, True)
    rng = np.random.default_rng(seed)
    d0 = delta_under(pair, pair.f0, pair.g0)
    deltas = []
    worst = -np.inf
    count = 0
    membership = True
    s = pair.f0.grid ** (2 * pair.spec.n)
    for _ in range(samples):
        f, g = sample_admissible(pair, rng, size)
        p = g if pair.cls.cointegrated else f + s * g
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            membership = False
        d = delta_under(pair, GridDensity(f), GridDensity(g))
        deltas.append(d)
        v = d - d0
        worst = max(worst, v)
        if v > tol:
            count += 1
    return SaddleReport(samples, count, float(worst), d0, tol, membership, tuple(deltas))
