#!/usr/bin/env python3
"""Solver versus time-domain projection on random rational models."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from models import random_model  # noqa: E402

from incinterp import increment_weights, project, solve  # noqa: E402


@dataclass
class Config:
    models: int = 20
    K: int = 50
    seed: int = 20240607


def main(cfg: Config) -> int:
    rng = np.random.default_rng(cfg.seed)
    print(f"{'#':>3} {'n':>2} {'mu':>2} {'N':>2} {'noise':>5} {'mse':>14} {'d_mse':>9} {'d_w':>9} {'tail':>9}")
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(cfg.models):
        model, func = random_model(rng, noise=bool(i % 2))
        sol = solve(model, func)
        w = increment_weights(sol, K=cfg.K)
        orc = project(model, func, K=cfg.K)
        dw = max(abs(w[k] - v) for k, v in orc.weights.items())
        dm = abs(orc.mse - sol.mse)
        worst = max(worst, dw, dm)
        s = model.spec
        print(f"{i:>3} {s.n:>2} {s.mu:>2} {s.N:>2} {str(not model.g.is_zero):>5} {sol.mse:>14.8f} "
              f"{dm:>9.1e} {dw:>9.1e} {w.tail:>9.1e}")
    print(f"worst deviation {worst:.2e} in {time.perf_counter() - t0:.1f}s")
    return 0 if worst < 1e-6 else 1


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", type=int, default=Config.models)
    ap.add_argument("--K", type=int, default=Config.K)
    ap.add_argument("--seed", type=int, default=Config.seed)
    a = ap.parse_args()
    sys.exit(main(Config(a.models, a.K, a.seed)))
