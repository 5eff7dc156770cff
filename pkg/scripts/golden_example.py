#!/usr/bin/env python3
"""ARIMA(1,1,0) example with phi = 1/2, gap {0, 1}, functional 2 xi(0) + xi(1).

Prints the exact system and its weights. The error is cross-checked by
quadrature and by a time-domain projection.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from incinterp import (
    FunctionalSpec,
    IncrementSpec,
    ObservationModel,
    RationalDensity,
    build_matrices,
    increment_weights,
    mse_integral,
    project,
    solve,
    solve_point,
    time_weights,
)


@dataclass
class Config:
    phi: str = "1/2"
    oracle_K: int = 10


def frac(x) -> str:
    return f"{x.numerator}/{x.denominator}" if hasattr(x, "denominator") and x.denominator != 1 else str(x)


def main(cfg: Config):
    spec = IncrementSpec(1, 1, 1)
    func = FunctionalSpec([2, 1])
    model = ObservationModel.noise_free(spec, RationalDensity.ar([cfg.phi], n=1, mu=1))

    P = build_matrices(model).P.exact_rows()
    print("F =", [[frac(x) for x in row] for row in P])
    sol = solve(model, func)
    print("c =", [frac(x) for x in sol.c_exact])
    w = increment_weights(sol)
    print("increment weights:", {k: frac(v) for k, v in w.weights.items()})
    print("time weights:     ", {k: frac(v) for k, v in time_weights(sol, w).items()})
    orc = project(model, func, K=cfg.oracle_K)
    print(f"mse exact      {frac(sol.mse_exact)} = {float(sol.mse_exact):.15f}")
    print(f"mse integral   {mse_integral(sol):.15f}")
    print(f"mse projection {orc.mse:.15f}  (K={cfg.oracle_K})")
    for p in range(spec.N + 1):
        print(f"single value xi({p}): mse {frac(solve_point(model, p).mse_exact)}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--phi", default=Config.phi)
    ap.add_argument("--oracle-K", type=int, default=Config.oracle_K)
    a = ap.parse_args()
    main(Config(a.phi, a.oracle_K))
