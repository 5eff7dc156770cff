#!/usr/bin/env python3
"""Least favorable pairs for each admissible class, with saddle-point checks.

Standard classes use the example signal density and an AR(1) noise reference
(coefficient 0.3, scale 0.2); cointegrated classes use p = beta^2 f + lam^2 g1.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

from incinterp import (
    DensityClass,
    FunctionalSpec,
    IncrementSpec,
    MinimaxOptions,
    RationalDensity,
    least_favorable,
    verify_saddle,
)
from incinterp.errors import IncInterpError
from incinterp.spectral import CompositeDensity


@dataclass
class Config:
    grid: int = 1024
    samples: int = 100
    seed: int = 0
    max_iter: int = 500
    include_slow: bool = False


def classes(include_slow: bool):
    f = RationalDensity.ar([0.5], n=1, mu=1)
    g1 = RationalDensity.ar([0.3], scale=0.2)
    yield "lower, f known (P2=1)", DensityClass.lower_reciprocal(P2=1.0, f=f), {}
    yield "lower, g known (P1=1)", DensityClass.lower_reciprocal(P1=1.0, g=g1), {}
    if include_slow:
        yield "lower, both free", DensityClass.lower_reciprocal(P1=1.0, P2=1.0), {}
    yield "eps, f known", DensityClass.eps_neighborhood(f, g1, eps2=0.1), {}
    yield "eps, g known", DensityClass.eps_neighborhood(f, g1, eps1=0.1), {}
    yield "eps, both free", DensityClass.eps_neighborhood(f, g1, eps1=0.1, eps2=0.1), {}
    for beta in (1.0, 2.0):
        p1 = CompositeDensity(((beta**2, 0, f), (1, 1, g1)))
        cls = DensityClass.eps_neighborhood(f, p1, eps1=0.1, eps2=0.1, beta=beta)
        yield f"coint eps, beta={beta:g}", cls, {}
        yield f"coint eps, beta={beta:g}, rescaled", cls, {"rescale": True}
        if include_slow or beta != 1.0:
            yield f"coint lower, beta={beta:g} (P1=2)", DensityClass.lower_reciprocal(P1=2.0, g=p1, beta=beta), {}


def main(cfg: Config):
    spec, func = IncrementSpec(1, 1, 1), FunctionalSpec([2, 1])
    print(f"{'class':<34} {'conv':>5} {'iter':>5} {'residual':>9} {'objective':>12} {'viol':>5} {'excess':>10} {'time':>6}")
    for label, cls, extra in classes(cfg.include_slow):
        t0 = time.perf_counter()
        opts = MinimaxOptions(grid=cfg.grid, max_iter=cfg.max_iter, **extra)
        try:
            pair = least_favorable(cls, spec, func, opts)
        except IncInterpError as exc:
            print(f"{label:<34} {type(exc).__name__}: {exc}")
            continue
        rep = verify_saddle(pair, samples=cfg.samples, seed=cfg.seed)
        print(f"{label:<34} {str(pair.converged):>5} {pair.iterations:>5} {pair.max_residual:>9.1e} "
              f"{pair.objective:>12.6f} {rep.violations:>5} {rep.max_violation:>10.2e} {time.perf_counter() - t0:>6.1f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=Config.grid)
    ap.add_argument("--samples", type=int, default=Config.samples)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--max-iter", type=int, default=Config.max_iter)
    ap.add_argument("--include-slow", action="store_true", help="also run the slow non-convex lower-reciprocal cases")
    a = ap.parse_args()
    main(Config(a.grid, a.samples, a.seed, a.max_iter, a.include_slow))
