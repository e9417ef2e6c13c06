"""Command-line front end: ``gmdreg estimate | simulate | diagnose``.

Exit codes: 0 success, 2 input/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .asymptotics import DensitySpec, diagnose
from .error_model import InnovationDist, LinearProcessSpec, sample_innovations
from .errors import NumericalError, ValidationError
from .estimators import FitOptions, OracleProcess, ToeplitzFromResiduals, estimate_covariance, fit
from .montecarlo import DEFAULT_BETA, SimulationConfig, grid_to_csv, grid_to_text, run_grid
from .objective import IntegratingMeasure, RegressionData
from .transforms import make_transform

log = logging.getLogger("gmdreg")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

CONFIG_KEYS = {
    "beta_true": list,
    "n_values": list,
    "replicates": int,
    "innovations": list,
    "kappa": (int, float),
    "g0": (int, float),
    "truncation": int,
    "seed": int,
    "estimators": list,
    "covariance_mode": str,
    "design_mode": str,
    "design_bounds": list,
    "fit": dict,
}
REQUIRED_KEYS = ("n_values", "replicates", "innovations")
FIT_KEYS = {"tol", "restarts", "max_iter"}


def read_regression_csv(path, intercept: bool = True) -> RegressionData:
    """Read a CSV with a header row, a ``y`` column and regressor columns.

    An intercept column is prepended unless ``intercept`` is False.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "y" not in header:
        raise ValidationError(f"{path}: header has no 'y' column")
    values = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ValidationError(f"{path}: row {line_no} has {len(row)} fields, expected {len(header)}")
        parsed = []
        for col, cell in zip(header, row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ValidationError(
                    f"{path}: row {line_no}, column '{col}': non-numeric value {cell!r}"
                ) from None
        values.append(parsed)
    arr = np.array(values, dtype=float).reshape(len(values), len(header))
    yi = header.index("y")
    y = arr[:, yi]
    X = np.delete(arr, yi, axis=1)
    if intercept:
        X = np.column_stack([np.ones(len(y)), X])
    if X.shape[1] == 0:
        raise ValidationError(f"{path}: no regressors")
    return RegressionData(X, y)


def _innovation_from_args(args) -> InnovationDist:
    if args.law == "mixture":
        return InnovationDist.mixture(args.eps, args.sigma_a, args.sigma_b)
    if args.scale is None:
        return InnovationDist.study_default(args.law)
    return InnovationDist(args.law, scale=args.scale)


def _measure_from_args(args) -> IntegratingMeasure:
    if args.measure == "lebesgue":
        return IntegratingMeasure.lebesgue()
    if args.measure == "degenerate":
        return IntegratingMeasure.degenerate_at_zero()
    return IntegratingMeasure.grid(args.grid_step, args.grid_extent)


def _covariance_from_args(args, data: RegressionData):
    if args.omega == "identity":
        return np.eye(data.n)
    if args.omega == "toeplitz":
        return estimate_covariance(data, ToeplitzFromResiduals(args.max_lag))
    process = LinearProcessSpec(kappa=args.kappa, truncation=args.truncation)
    return estimate_covariance(data, OracleProcess(process, _innovation_from_args(args)))


def _manifest(command: str, args, outputs, start: float, **extra) -> dict:
    return {
        "command": command,
        "argv": sys.argv[1:],
        "seed": getattr(args, "seed", None),
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "wall_time_seconds": time.perf_counter() - start,
        **extra,
    }


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_estimate(args) -> int:
    start = time.perf_counter()
    data = read_regression_csv(args.data, intercept=not args.no_intercept)
    method = args.method.upper()
    omega = None if method == "OLS" else _covariance_from_args(args, data)
    opts = FitOptions(start=args.start, tol=args.tol, restarts=args.restarts, seed=args.seed)
    result = fit(data, method, omega, measure=_measure_from_args(args), opts=opts)
    print(" ".join(f"{v:.10g}" for v in result.beta_hat))
    if args.output:
        payload = result.to_dict()
        payload["manifest"] = _manifest("estimate", args, [args.output], start, data=str(args.data))
        _write_json(args.output, payload)
    return EXIT_OK


def load_config(path) -> dict:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: cannot parse config: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: config must be a mapping")
    problems = [f"unknown key '{k}'" for k in raw if k not in CONFIG_KEYS]
    problems += [f"missing key '{k}'" for k in REQUIRED_KEYS if k not in raw]
    for k, typ in CONFIG_KEYS.items():
        if k in raw and (not isinstance(raw[k], typ) or isinstance(raw[k], bool)):
            problems.append(f"key '{k}' has wrong type {type(raw[k]).__name__}")
    if isinstance(raw.get("fit"), dict):
        problems += [f"unknown key 'fit.{k}'" for k in raw["fit"] if k not in FIT_KEYS]
    if problems:
        raise ValidationError(f"{path}: invalid config: " + "; ".join(problems))
    return raw


def config_to_simulation(raw: dict):
    """Translate a parsed config mapping into (base config, innovations, n values)."""
    innovations = []
    for entry in raw["innovations"]:
        if isinstance(entry, str):
            innovations.append(InnovationDist.study_default(entry))
        elif isinstance(entry, dict):
            innovations.append(InnovationDist.from_dict(entry))
        else:
            raise ValidationError(f"invalid innovations entry {entry!r}")
    n_values = [int(n) for n in raw["n_values"]]
    lo, hi = raw.get("design_bounds", [0.0, 50.0])
    fit_cfg = raw.get("fit", {})
    base = SimulationConfig(
        n=n_values[0],
        replicates=raw["replicates"],
        innovation=innovations[0],
        process=LinearProcessSpec(
            kappa=float(raw.get("kappa", 7.5)),
            g0=float(raw.get("g0", 1.0)),
            truncation=int(raw.get("truncation", 50)),
        ),
        beta_true=tuple(float(b) for b in raw.get("beta_true", DEFAULT_BETA)),
        design_low=float(lo),
        design_high=float(hi),
        design_mode=raw.get("design_mode", "fixed"),
        covariance_mode=raw.get("covariance_mode", "oracle"),
        base_seed=int(raw.get("seed", SimulationConfig.base_seed)),
        estimators=tuple(e.upper() for e in raw.get("estimators", ("GLS", "GMD1", "GMD2"))),
        fit_options=FitOptions(**fit_cfg),
    )
    return base, innovations, n_values


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    raw = load_config(args.config)
    base, innovations, n_values = config_to_simulation(raw)
    if args.seed is not None:
        base = replace(base, base_seed=args.seed)
    tables = run_grid(base, innovations, n_values, threads=args.threads)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "summary.txt", out / "summary.csv", out / "summary.json"]
    digest = hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()[:16]
    header = [
        f"gmdreg {__version__} simulate",
        f"config_sha256={digest}",
        f"base_seed={base.base_seed}",
        f"replicates={base.replicates}",
    ]
    paths[0].write_text("\n".join(f"# {h}" for h in header) + "\n\n" + grid_to_text(tables))
    paths[1].write_text(grid_to_csv(tables, header_lines=header))
    manifest = _manifest(
        "simulate", args, paths, start, config=str(args.config), config_sha256=digest, base_seed=base.base_seed
    )
    _write_json(paths[2], {"manifest": manifest, "cells": [t.to_dict() for t in tables]})
    print(grid_to_text(tables))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    start = time.perf_counter()
    measure = _measure_from_args(args)
    dist = _innovation_from_args(args)
    dens = DensitySpec.from_innovation(dist)
    samples = sample_innovations(dist, args.samples, np.random.default_rng(args.seed))
    X = Q = None
    if args.data:
        data = read_regression_csv(args.data, intercept=not args.no_intercept)
        X = data.X
        Q = make_transform(args.transform, _covariance_from_args(args, data))
    report = diagnose(dens, measure, samples, X=X, Q=Q)
    payload = report.to_dict()
    print(json.dumps({"tau": report.tau, "f_norm_sq": report.f_norm_sq}))
    if args.output:
        payload["manifest"] = _manifest("diagnose", args, [args.output], start)
        _write_json(args.output, payload)
    return EXIT_OK


def _add_law_args(p):
    p.add_argument("--law", choices=["normal", "laplace", "logistic", "mixture"], default="normal")
    p.add_argument("--scale", type=float, default=None, help="sd (normal) or scale (laplace/logistic)")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--sigma-a", type=float, default=2.0)
    p.add_argument("--sigma-b", type=float, default=10.0)


def _add_measure_args(p):
    p.add_argument("--measure", choices=["lebesgue", "degenerate", "grid"], default="lebesgue")
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--grid-extent", type=float, default=50.0)


def _add_covariance_args(p):
    p.add_argument("--omega", choices=["identity", "toeplitz", "oracle"], default="toeplitz")
    p.add_argument("--max-lag", type=int, default=2)
    p.add_argument("--kappa", type=float, default=7.5)
    p.add_argument("--truncation", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmdreg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="fit a regression from a CSV file")
    p.add_argument("data", help="CSV with header: y, x1, ..., x{p-1}")
    p.add_argument("--method", choices=["gmd1", "gmd2", "gls", "ols"], default="gmd1")
    p.add_argument("--no-intercept", action="store_true")
    p.add_argument("--start", choices=["gls", "ols"], default="gls")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--restarts", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    _add_covariance_args(p)
    _add_measure_args(p)
    _add_law_args(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run the Monte Carlo study from a config file")
    p.add_argument("config", help="YAML or JSON config file")
    p.add_argument("--output", "-o", default="simulation-output")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="asymptotic variance diagnostics")
    _add_law_args(p)
    _add_measure_args(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", help="optional CSV design for the covariance matrix")
    p.add_argument("--no-intercept", action="store_true")
    p.add_argument("--transform", choices=["symmetric", "cholesky", "identity"], default="symmetric")
    p.add_argument("--output", "-o")
    _add_covariance_args(p)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
