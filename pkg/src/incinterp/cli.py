"""Command-line front end.

    incinterp --config run.json [--series obs.csv] [--out DIR] [--grid-out] [--verbose]

The config is one JSON document; the report is written to ``DIR/report.json``
(stdout when ``--out`` is omitted). Exit codes: 0 ok, 2 validation,
3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import IncInterpError, ValidationError
from .increments import FunctionalSpec, IncrementSpec, _exact
from .interpolator import (
    ObservationSeries,
    estimate,
    increment_weights,
    mse_integral,
    solve,
    solve_cointegrated,
    solve_point,
    spectral_characteristic,
    time_weights,
)
from .minimax import DensityClass, MinimaxOptions, least_favorable, verify_saddle
from .oracle import project
from .spectral import ZERO, ObservationModel, density_from_dict, midpoint_grid

SCHEMA_VERSION = "1.0"
TASKS = ("interpolate", "point", "cointegrate", "minimax", "verify", "verify-saddle")

log = logging.getLogger("incinterp")


@dataclass(frozen=True)
class RunConfig:
    task: str
    spec: IncrementSpec
    functional: FunctionalSpec
    raw: dict
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ValidationError("config must be a JSON object")
        task = d.get("task")
        if task not in TASKS:
            raise ValidationError(f"task must be one of {', '.join(TASKS)}; got {task!r}")
        try:
            sp = d["spec"]
            spec = IncrementSpec(int(sp["n"]), int(sp["mu"]), int(sp["N"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"spec needs integer n, mu, N ({exc})") from None
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        a = d.get("functional")
        if not a:
            raise ValidationError("functional must be a nonempty list of coefficients")
        func = FunctionalSpec(a)
        if func.N != spec.N:
            raise ValidationError(f"functional has {len(func.a)} coefficients, gap has {spec.N + 1}")
        opts = dict(d.get("options", {}))
        for key, lo in (("tol", 0.0), ("K", 1), ("grid", 2), ("samples", 0), ("oracle_K", 1)):
            if key in opts and opts[key] is not None and not opts[key] >= lo:
                raise ValidationError(f"option {key} out of range")
        needs = {"point": ("f", "point"), "cointegrate": ("f", "beta"), "minimax": ("class",),
                 "verify-saddle": ("class",), "interpolate": ("f",), "verify": ("f",)}[task]
        missing = [k for k in needs if k not in d]
        if missing:
            raise ValidationError(f"task {task} requires {', '.join(missing)}")
        if task == "cointegrate" and "p" not in d and "remainder" not in d:
            raise ValidationError("cointegrate requires p or remainder")
        return cls(task, spec, func, d, opts)

    def model(self) -> ObservationModel:
        d = self.raw
        f = density_from_dict(d["f"])
        if self.task == "cointegrate" or "beta" in d:
            beta = _exact(d["beta"])
            if "remainder" in d:
                return ObservationModel.cointegrated_from_remainder(self.spec, f, density_from_dict(d["remainder"]), beta)
            return ObservationModel.cointegrated(self.spec, f, density_from_dict(d["p"]), beta)
        g = density_from_dict(d["g"]) if "g" in d else ZERO
        return ObservationModel.signal_plus_noise(self.spec, f, g)

    def density_class(self) -> DensityClass:
        c = dict(self.raw["class"])
        kind = c.pop("kind", None)
        dens = {k: density_from_dict(c.pop(k)) for k in ("f", "g", "p") if k in c}
        second = dens.get("p", dens.get("g"))
        kw = {k: float(v) for k, v in c.items() if k in ("P1", "P2", "eps1", "eps2", "beta")}
        unknown = set(c) - set(kw)
        if unknown:
            raise ValidationError(f"unknown class fields {sorted(unknown)}")
        return DensityClass(kind, dens.get("f"), second, **kw)

    def minimax_options(self) -> MinimaxOptions:
        # "tol" belongs to the linear solver; the minimax stopping tolerance is separate
        o = self.options
        mo = {k: o[k] for k in ("grid", "theta", "max_iter", "ceiling", "polish", "rescale") if k in o}
        if "minimax_tol" in o:
            mo["tol"] = float(o["minimax_tol"])
        return MinimaxOptions(**mo)


# ---------------------------------------------------------------------------
# serialisation


def _scalar(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return format(x, ".17g") if math.isfinite(x) else json.dumps(str(x))
    if isinstance(x, Fraction):
        return json.dumps(f"{x.numerator}/{x.denominator}")
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _fmt(x, depth: int = 0) -> str:
    pad, inner = "  " * depth, "  " * (depth + 1)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = (f"{inner}{json.dumps(str(k))}: {_fmt(v, depth + 1)}" for k, v in x.items())
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in x):
            return "[" + ", ".join(_scalar(v) for v in x) + "]"
        return "[\n" + ",\n".join(inner + _fmt(v, depth + 1) for v in x) + "\n" + pad + "]"
    return _scalar(x)


def dumps(obj) -> str:
    """JSON text with floats at 17 significant digits (stable across runs)."""
    return _fmt(obj) + "\n"


def _rational(x):
    return f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else x


def _weights_block(w: dict) -> dict:
    return {str(k): float(v) for k, v in sorted(w.items())}


def _exact_weights(w: dict) -> dict | None:
    if all(isinstance(v, (int, Fraction)) for v in w.values()):
        return {str(k): _rational(Fraction(v)) for k, v in sorted(w.items())}
    return None


# ---------------------------------------------------------------------------
# tasks


def _solution_block(sol, opts) -> dict:
    K = opts.get("K")
    w = increment_weights(sol, K=K, tol=opts.get("weight_tol", 1e-8))
    tw = time_weights(sol, w)
    out = {
        "c": [float(x) for x in sol.c],
        "mse": sol.mse,
        "mse_integral": mse_integral(sol),
        "increment_weights": _weights_block(w.weights),
        "boundary_weights": _weights_block(sol.boundary_weights),
        "time_weights": _weights_block(tw),
        "K": w.K,
        "diagnostics": {
            "residual": sol.residual,
            "condition": sol.condition,
            "orthogonality": w.orthogonality,
            "tail": w.tail,
            "exact": sol.exact,
        },
    }
    if sol.exact:
        out["exact"] = {
            "c": [_rational(Fraction(x)) for x in sol.c_exact],
            "mse": _rational(Fraction(sol.mse_exact)),
            "increment_weights": _exact_weights(w.weights),
            "time_weights": _exact_weights(tw),
        }
    rel = abs(out["mse_integral"] - sol.mse) / max(abs(sol.mse), 1e-300)
    out["diagnostics"]["mse_route_agreement"] = rel
    return out, w


def _reference(cfg: RunConfig, computed: dict) -> dict | None:
    """Compare computed values with the optional ``reference`` block of the config."""
    ref = cfg.raw.get("reference")
    if not ref:
        return None
    out = {}
    for key, val in ref.items():
        if key == "note":
            out["note"] = val
            continue
        got = computed.get(key)
        if got is None:
            out[key] = {"reference": val, "computed": None, "match": False}
            continue
        if isinstance(val, dict):
            diffs = {k: abs(float(Fraction(str(v))) - float(got.get(str(k), 0.0))) for k, v in val.items()}
            match = max(diffs.values(), default=0.0) < 1e-10
        else:
            match = abs(float(Fraction(str(val))) - float(got)) < 1e-10 * max(1.0, abs(float(got)))
        out[key] = {"reference": val, "computed": got, "match": bool(match)}
    return out


def _series(path):
    if path is None:
        return None
    return ObservationSeries.from_csv(path)


def run_interpolate(cfg, series):
    model = cfg.model()
    sol = solve(model, cfg.functional, tol=cfg.options.get("tol", 1e-10))
    res, w = _solution_block(sol, cfg.options)
    if series is not None:
        res["estimate"] = estimate(sol, series, w)
    return res, sol


def run_point(cfg, series):
    model = cfg.model()
    p = int(cfg.raw["point"])
    sol = solve_point(model, p, tol=cfg.options.get("tol", 1e-10))
    res, w = _solution_block(sol, cfg.options)
    res["point"] = p
    if series is not None:
        res["estimate"] = estimate(sol, series, w)
    return res, sol


def run_cointegrate(cfg, series):
    model = cfg.model()
    sol = solve_cointegrated(model, cfg.functional, tol=cfg.options.get("tol", 1e-10),
                             rescale=bool(cfg.options.get("rescale", False)))
    res, w = _solution_block(sol, cfg.options)
    res["rescaled"] = bool(cfg.options.get("rescale", False))
    if series is not None:
        res["estimate"] = estimate(sol, series, w)
    return res, sol


def run_verify(cfg, series):
    res, sol = run_cointegrate(cfg, series) if "beta" in cfg.raw else run_interpolate(cfg, series)
    K = int(cfg.options.get("oracle_K", 50))
    orc = project(sol.model, cfg.functional, K=K)
    w = res["increment_weights"]
    deltas = {str(k): abs(float(w.get(str(k), 0.0)) - v) for k, v in sorted(orc.weights.items())}
    res["oracle"] = {
        "K": K,
        "mse": orc.mse,
        "mse_delta": abs(orc.mse - sol.mse),
        "max_weight_delta": max(deltas.values(), default=0.0),
        "weights": _weights_block(orc.weights),
    }
    return res, sol


def _pair_block(pair) -> dict:
    sol = pair.robust_solution
    return {
        "converged": pair.converged,
        "iterations": pair.iterations,
        "alpha1": pair.alpha1,
        "alpha2": pair.alpha2,
        "objective": pair.objective,
        "residuals": dict(sorted(pair.residuals.items())),
        "boundary_active": pair.boundary_active,
        "ascent": pair.ascent,
        "bounded": pair.bounded,
        "robust": {"c": [float(x) for x in sol.c], "mse": sol.mse} if sol is not None else None,
    }


def run_minimax(cfg, series):
    pair = least_favorable(cfg.density_class(), cfg.spec, cfg.functional, cfg.minimax_options())
    return _pair_block(pair), pair


def run_verify_saddle(cfg, series):
    res, pair = run_minimax(cfg, series)
    rep = verify_saddle(pair, samples=int(cfg.options.get("samples", 100)), seed=int(cfg.options.get("seed", 0)),
                        tol=float(cfg.options.get("saddle_tol", 1e-6)))
    res["saddle"] = {
        "samples": rep.samples,
        "violations": rep.violations,
        "max_violation": rep.max_violation,
        "delta0": rep.delta0,
        "membership_ok": rep.membership_ok,
        "passed": rep.passed,
    }
    return res, pair


RUNNERS = {
    "interpolate": run_interpolate,
    "point": run_point,
    "cointegrate": run_cointegrate,
    "verify": run_verify,
    "minimax": run_minimax,
    "verify-saddle": run_verify_saddle,
}


# ---------------------------------------------------------------------------
# grids


def write_grid(path: Path, cfg: RunConfig, obj):
    """CSV with columns lambda, f, g, |h|, arg h."""
    if hasattr(obj, "f0"):  # least favorable pair
        lam = obj.f0.grid
        f, g = obj.f0.values, obj.g0.values
        sol = obj.robust_solution
    else:
        sol = obj
        lam = midpoint_grid(int(cfg.options.get("grid_points", 1024)))
        m = sol.model
        f = m.f(lam)
        g = (m.p if m.cointegrated_mode else m.g)(lam)
    h = spectral_characteristic(sol, lam)
    second = "p" if getattr(sol.model, "cointegrated_mode", False) else "g"
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["lambda", "f", second, "abs_h", "arg_h"])
        for row in zip(lam, f, g, np.abs(h), np.angle(h)):
            wr.writerow([format(float(x), ".17g") for x in row])


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="incinterp", description="Optimal and minimax interpolation of sequences with stationary increments.")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--series", help="CSV of observations t,value (gap rows absent)")
    ap.add_argument("--out", help="output directory (report.json, grid.csv)")
    ap.add_argument("--grid-out", action="store_true", help="also write density/characteristic grid CSV")
    ap.add_argument("--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _error_report(exc: Exception, code: int) -> dict:
    return {"schema_version": SCHEMA_VERSION, "status": "error",
            "error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out_dir = Path(args.out) if args.out else None

    def emit(report: dict):
        text = dumps(report)
        if out_dir is None:
            sys.stdout.write(text)
        else:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "report.json").write_text(text)

    try:
        try:
            raw = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from None
        cfg = RunConfig.from_dict(raw)
        series = _series(args.series)
        log.info("running task %s", cfg.task)
        result, obj = RUNNERS[cfg.task](cfg, series)
        report = {
            "schema_version": SCHEMA_VERSION,
            "status": "ok",
            "task": cfg.task,
            "config": raw,
            "result": result,
        }
        ref = _reference(cfg, result)
        if ref is not None:
            report["reference_comparison"] = ref
        if args.grid_out:
            if out_dir is None:
                raise ValidationError("--grid-out needs --out")
            out_dir.mkdir(parents=True, exist_ok=True)
            write_grid(out_dir / "grid.csv", cfg, obj)
        emit(report)
        return 0
    except (OSError, IncInterpError, ValueError) as exc:
        err = exc
    if isinstance(err, OSError):
        code = 4
    elif isinstance(err, IncInterpError):
        code = err.exit_code
    else:  # malformed values inside the config
        code = 2
    log.debug("failure", exc_info=err)
    rep = _error_report(err, code)
    sys.stderr.write(dumps(rep))
    if out_dir is not None and code != 4:
        try:
            emit(rep)
        except OSError:
            pass
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
