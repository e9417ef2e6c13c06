"""Monte Carlo harness comparing GLS, GMD1, GMD2 (and optionally OLS).

Seeding is index-derived: the design for sample size ``n`` comes from
``SeedSequence([base_seed, n, DESIGN_STREAM])`` and replicate ``r`` of law
``law`` from ``SeedSequence([base_seed, n, law_tag, r])``. Replicates can
therefore run in any order or on any number of workers and the summary is
bit-identical.
"""

from __future__ import annotations

import io
import json
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .error_model import InnovationDist, LinearProcessSpec, generate_errors
from .errors import GMDError, SimulationAborted, ValidationError
from .estimators import FitOptions, OracleProcess, ToeplitzFromResiduals, estimate_covariance, fit
from .objective import RegressionData

log = logging.getLogger(__name__)

DEFAULT_BETA = (-2.0, 3.0, 1.5, -4.3)
ESTIMATORS = ("OLS", "GLS", "GMD1", "GMD2")
DESIGN_STREAM = 0x5EED
MAX_FAILURE_RATE = 0.01

__all__ = [
    "SimulationConfig",
    "SummaryRow",
    "SummaryTable",
    "draw_design",
    "run_replicate",
    "summarize",
    "run_simulation",
    "run_grid",
    "grid_to_csv",
    "grid_to_text",
]


def law_tag(dist: InnovationDist) -> int:
    return zlib.crc32(json.dumps(dist.to_dict(), sort_keys=True).encode())


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 50
    replicates: int = 200
    innovation: InnovationDist = field(default_factory=InnovationDist.normal)
    process: LinearProcessSpec = field(default_factory=LinearProcessSpec)
    beta_true: tuple = DEFAULT_BETA
    design: str = "uniform"
    design_low: float = 0.0
    design_high: float = 50.0
    design_matrix: np.ndarray | None = None
    design_mode: str = "fixed"
    covariance_mode: object = "oracle"
    base_seed: int = 20170101
    estimators: tuple = ("GLS", "GMD1", "GMD2")
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        p = len(self.beta_true)
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.n <= p:
            raise ValidationError(f"need n > p, got n={self.n}, p={p}")
        if self.design not in ("uniform", "fixed"):
            raise ValidationError(f"unknown design {self.design!r}")
        if self.design == "fixed":
            X = np.asarray(self.design_matrix, dtype=float)
            if X.shape != (self.n, p):
                raise ValidationError(f"fixed design must be {self.n}x{p}, got {X.shape}")
        if self.design_mode not in ("fixed", "redrawn"):
            raise ValidationError(f"unknown design_mode {self.design_mode!r}")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad or not self.estimators:
            raise ValidationError(f"unknown estimators {sorted(bad)}")
        self.covariance_method()

    @property
    def p(self) -> int:
        return len(self.beta_true)

    def covariance_method(self):
        mode = self.covariance_mode
        if mode == "oracle":
            return OracleProcess(self.process, self.innovation)
        if mode == "identity":
            return None
        if isinstance(mode, ToeplitzFromResiduals):
            return mode
        if isinstance(mode, str) and mode.startswith("toeplitz"):
            _, _, lag = mode.partition(":")
            return ToeplitzFromResiduals(int(lag) if lag else 2)
        raise ValidationError(f"unknown covariance_mode {mode!r}")

    def echo(self) -> dict:
        return {
            "n": self.n,
            "replicates": self.replicates,
            "innovation": self.innovation.to_dict(),
            "process": {
                "kappa": self.process.kappa,
                "g0": self.process.g0,
                "truncation": self.process.truncation,
            },
            "beta_true": list(self.beta_true),
            "design": self.design,
            "design_bounds": [self.design_low, self.design_high],
            "design_mode": self.design_mode,
            "covariance_mode": str(self.covariance_mode),
            "base_seed": self.base_seed,
            "estimators": list(self.estimators),
            "fit_options": {
                "tol": self.fit_options.tol,
                "restarts": self.fit_options.restarts,
                "max_iter": self.fit_options.max_iter,
            },
        }


def draw_design(config: SimulationConfig, rep_index: int | None = None) -> np.ndarray:
    """Intercept column plus ``p - 1`` uniform regressors (or the fixed matrix)."""
    if config.design == "fixed":
        return np.asarray(config.design_matrix, dtype=float)
    key = [config.base_seed, config.n, DESIGN_STREAM]
    if config.design_mode == "redrawn":
        key += [law_tag(config.innovation), rep_index]
    rng = np.random.default_rng(key)
    cols = rng.uniform(config.design_low, config.design_high, (config.n, config.p - 1))
    return np.column_stack([np.ones(config.n), cols])


def run_replicate(config: SimulationConfig, rep_index: int, X=None, errors=None) -> dict | None:
    """Fit every requested estimator on one simulated data set.

    Returns ``{name: beta_hat}`` or ``None`` when any estimator rejects the
    data. ``errors`` overrides the generated error vector (used to force
    noiseless data in tests).
    """
    if X is None:
        X = draw_design(config, rep_index)
    beta = np.asarray(config.beta_true, dtype=float)
    if errors is None:
        rng = np.random.default_rng([config.base_seed, config.n, law_tag(config.innovation), rep_index])
        errors = generate_errors(config.process, config.innovation, config.n, rng)
    data = RegressionData(X, X @ beta + errors)
    opts = replace(config.fit_options, seed=rep_index)
    try:
        method = config.covariance_method()
        omega = np.eye(config.n) if method is None else estimate_covariance(data, method)
        return {name: fit(data, name, omega, opts=opts).beta_hat for name in config.estimators}
    except GMDError as exc:
        log.warning("replicate %d failed: %s", rep_index, exc)
        return None


@dataclass(frozen=True)
class SummaryRow:
    estimator: str
    coefficient: int
    bias: float
    se: float
    mse: float


@dataclass
class SummaryTable:
    rows: list
    replicates: int
    failed: int = 0
    config: dict = field(default_factory=dict)
    runtime: float = 0.0

    def get(self, estimator: str, coefficient: int) -> SummaryRow:
        for row in self.rows:
            if row.estimator == estimator and row.coefficient == coefficient:
                return row
        raise KeyError((estimator, coefficient))

    @property
    def estimators(self) -> list:
        return list(dict.fromkeys(r.estimator for r in self.rows))

    def values(self, estimator: str, stat: str) -> np.ndarray:
        rows = sorted((r for r in self.rows if r.estimator == estimator), key=lambda r: r.coefficient)
        return np.array([getattr(r, stat) for r in rows])

    def to_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "failed": self.failed,
            "runtime_seconds": self.runtime,
            "config": self.config,
            "rows": [vars(r) for r in self.rows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryTable":
        return cls(
            rows=[SummaryRow(**r) for r in d["rows"]],
            replicates=d["replicates"],
            failed=d.get("failed", 0),
            config=d.get("config", {}),
            runtime=d.get("runtime_seconds", 0.0),
        )


def summarize(estimates: dict, beta_true) -> SummaryTable:
    """Bias, SE (sample sd, divisor R-1) and MSE per estimator and coefficient."""
    beta = np.asarray(beta_true, dtype=float)
    rows = []
    reps = None
    for name, est in estimates.items():
        est = np.asarray(est, dtype=float)
        reps = est.shape[0]
        if reps < 2:
            raise ValidationError("summarize needs at least 2 replicates")
        dev = est - beta
        bias = dev.mean(axis=0)
        se = est.std(axis=0, ddof=1)
        mse = (dev * dev).mean(axis=0)
        identity = bias**2 + se**2 * (reps - 1) / reps
        assert np.allclose(mse, identity, rtol=1e-9, atol=1e-12 * (1 + np.abs(beta).max()) ** 2)
        for k in range(beta.size):
            rows.append(SummaryRow(name, k + 1, float(bias[k]), float(se[k]), float(mse[k])))
    return SummaryTable(rows=rows, replicates=reps or 0)


def _replicate_task(args):
    config, rep_index, X = args
    return rep_index, run_replicate(config, rep_index, X)


def run_simulation(config: SimulationConfig, threads: int = 1, order=None) -> SummaryTable:
    """Run all replicates and summarise.

    ``order`` optionally permutes the execution order; results are placed by
    replicate index so the summary does not depend on it.
    """
    start = time.perf_counter()
    X = draw_design(config) if config.design_mode == "fixed" else None
    indices = list(range(config.replicates)) if order is None else list(order)
    if sorted(indices) != list(range(config.replicates)):
        raise ValidationError("order must be a permutation of the replicate indices")
    tasks = [(config, r, X) for r in indices]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_replicate_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        outcomes = [_replicate_task(t) for t in tasks]

    results = [None] * config.replicates
    for rep_index, out in outcomes:
        results[rep_index] = out
    failed = sum(r is None for r in results)
    if failed:
        log.warning("%d of %d replicates failed and were excluded", failed, config.replicates)
    if failed > MAX_FAILURE_RATE * config.replicates:
        raise SimulationAborted(
            f"{failed} of {config.replicates} replicates failed (limit {MAX_FAILURE_RATE:.0%})"
        )
    ok = [r for r in results if r is not None]
    estimates = {name: np.array([r[name] for r in ok]) for name in config.estimators}
    table = summarize(estimates, config.beta_true)
    table.failed = failed
    table.replicates = config.replicates
    table.config = config.echo()
    table.runtime = time.perf_counter() - start
    return table


def run_grid(base: SimulationConfig, innovations, n_values, threads: int = 1) -> list:
    """One `SummaryTable` per (innovation, n) cell, innovation-major."""
    return [
        run_simulation(replace(base, innovation=dist, n=n), threads=threads)
        for dist in innovations
        for n in n_values
    ]


def _cell_label(table: SummaryTable) -> tuple:
    return InnovationDist.from_dict(table.config["innovation"]).short_name, table.config["n"]


def grid_to_csv(tables: list, header_lines=()) -> str:
    """CSV with columns innovation, n, estimator, coefficient, bias, se, mse.

    Floats are written with `repr`, so values round-trip exactly.
    """
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    buf.write("innovation,n,estimator,coefficient,bias,se,mse\n")
    for table in tables:
        law, n = _cell_label(table)
        for r in table.rows:
            buf.write(f"{law},{n},{r.estimator},{r.coefficient},{r.bias!r},{r.se!r},{r.mse!r}\n")
    return buf.getvalue()


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def grid_to_text(tables: list) -> str:
    """Aligned table: one block per (n, innovation), bias/SE/MSE per estimator."""
    lines = []
    by_n = {}
    for t in tables:
        by_n.setdefault(t.config["n"], []).append(t)
    for n, group in by_n.items():
        ests = group[0].estimators
        head = f"{'':4}{'':6}" + "".join(f"{e:^27}" for e in ests)
        sub = f"{'':4}{'':6}" + "".join(f"{'bias':>9}{'SE':>9}{'MSE':>9}" for _ in ests)
        rule = "-" * len(sub)
        lines += [f"Bias, SE, and MSE of estimators with n={n}", rule, head, sub, rule]
        for t in group:
            law, _ = _cell_label(t)
            for k in range(1, len(t.config["beta_true"]) + 1):
                cells = "".join(
                    f"{_fmt(t.get(e, k).bias):>9}{_fmt(t.get(e, k).se):>9}{_fmt(t.get(e, k).mse):>9}"
                    for e in ests
                )
                lines.append(f"{law if k == 1 else '':4}{'b' + str(k):6}{cells}")
            lines.append(rule)
        lines.append("")
    return "\n".join(lines)
