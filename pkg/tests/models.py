"""Model factories shared by the test modules."""

from __future__ import annotations

import numpy as np

from incinterp import FunctionalSpec, IncrementSpec, ObservationModel, RationalDensity
from incinterp.spectral import ZERO

GOLDEN_SPEC = IncrementSpec(1, 1, 1)
GOLDEN_FUNC = FunctionalSpec([2, 1])
GOLDEN_F = RationalDensity.ar(["1/2"], n=1, mu=1)


def golden_model() -> ObservationModel:
    return ObservationModel.noise_free(GOLDEN_SPEC, GOLDEN_F)


def random_model(rng: np.random.Generator, noise: bool | None = None, N: int | None = None):
    """Rational increment density (AR(1) or MA(1), coefficient magnitude <= 0.5)
    plus optional AR(1) noise. The bound keeps every pole at least a factor 2
    outside the unit circle, so transfer coefficients decay geometrically."""
    n = int(rng.integers(1, 3))
    mu = int(rng.integers(1, 3))
    N = int(rng.integers(0, 3)) if N is None else N
    spec = IncrementSpec(n, mu, N)
    c = float(np.round(rng.uniform(-0.5, 0.5), 3))
    scale = float(np.round(rng.uniform(0.5, 2.0), 3))
    if rng.uniform() < 0.5:
        f = RationalDensity(num=(1,), den=(1, c), scale=scale, n=n, mu=mu)
    else:
        f = RationalDensity(num=(1, c), den=(1,), scale=scale, n=n, mu=mu)
    if noise is None:
        noise = bool(rng.uniform() < 0.5)
    g = ZERO
    if noise:
        g = RationalDensity.ar([float(np.round(rng.uniform(-0.5, 0.5), 3))], scale=float(np.round(rng.uniform(0.05, 0.5), 3)))
    a = np.round(rng.uniform(-2, 2, N + 1), 3)
    a[0] = a[0] if abs(a[0]) > 0.1 else 1.0
    return ObservationModel.signal_plus_noise(spec, f, g), FunctionalSpec([float(x) for x in a])
