"""OLS, GLS and generalized minimum-distance (GMD) regression estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from .error_model import InnovationDist, LinearProcessSpec, analytic_autocovariance
from .errors import NotPositiveDefiniteError, SingularDesignError, ValidationError
from .objective import (
    IntegratingMeasure,
    RegressionData,
    dispersion,
    lebesgue_from_residuals,
    make_context,
)
from .transforms import TransformKind, check_covariance, make_transform

__all__ = [
    "EstimatorResult",
    "FitOptions",
    "OracleProcess",
    "ToeplitzFromResiduals",
    "fit_ols",
    "fit_gls",
    "fit_gmd",
    "fit",
    "estimate_covariance",
]

GMD_TRANSFORMS = {"GMD1": TransformKind.SYMMETRIC_ROOT, "GMD2": TransformKind.CHOLESKY_FACTOR}


@dataclass
class EstimatorResult:
    beta_hat: np.ndarray
    method: str
    objective_value: float | None = None
    iterations: int = 0
    converged: bool = True
    start: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "beta_hat": [float(v) for v in self.beta_hat],
            "objective_value": self.objective_value,
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


@dataclass(frozen=True)
class FitOptions:
    """Controls for the simplex search.

    ``start`` is ``"gls"``, ``"ols"`` or an explicit coefficient vector. ``tol``
    is the final simplex diameter relative to the initial one; ``max_iter``
    defaults to ``500 * p`` per run.
    """

    start: object = "gls"
    tol: float = 1e-6
    max_iter: int | None = None
    restarts: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValidationError("tol must be positive")
        if self.restarts < 0:
            raise ValidationError("restarts must be >= 0")

    def iteration_cap(self, p: int) -> int:
        cap = 500 * p if self.max_iter is None else int(self.max_iter)
        if cap < p + 1:
            raise ValidationError(f"max_iter must be at least p+1={p + 1}")
        return cap


def _check_rank(X: np.ndarray):
    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        raise SingularDesignError(f"design matrix has rank {rank} < p={X.shape[1]}")


def fit_ols(data: RegressionData) -> EstimatorResult:
    _check_rank(data.X)
    beta, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    return EstimatorResult(beta_hat=beta, method="OLS")


def fit_gls(data: RegressionData, omega_hat) -> EstimatorResult:
    """``(X' W X)^{-1} X' W y`` with ``W = omega_hat^{-1}``, solved by whitening."""
    omega = check_covariance(omega_hat)
    if omega.shape[0] != data.n:
        raise ValidationError(f"omega_hat is {omega.shape}, expected ({data.n}, {data.n})")
    lower = np.linalg.cholesky(omega)
    Xw = sla.solve_triangular(lower, data.X, lower=True)
    yw = sla.solve_triangular(lower, data.y, lower=True)
    _check_rank(Xw)
    beta, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    return EstimatorResult(beta_hat=beta, method="GLS")


def _residual_scale(r: np.ndarray) -> float:
    s = 1.4826 * np.median(np.abs(r - np.median(r)))
    if s <= 0:
        s = np.sqrt(np.mean(r * r))
    return s if s > 0 else 1.0


def fit_gmd(
    data: RegressionData,
    transform: TransformKind | str,
    omega_hat,
    measure: IntegratingMeasure | None = None,
    opts: FitOptions | None = None,
) -> EstimatorResult:
    """Minimise the dispersion over ``b`` with Nelder-Mead and randomised restarts.

    The search runs in the whitened coordinates ``b = b0 + A u`` so that the
    design part of the residual map, ``D = QXA``, has orthonormal columns.
    Restarts rebuild a randomly rotated simplex around the incumbent.
    """
    opts = opts or FitOptions()
    measure = measure or IntegratingMeasure.lebesgue()
    kind = TransformKind(transform)
    method = {v: k for k, v in GMD_TRANSFORMS.items()}.get(kind, "GMD")
    Q = make_transform(kind, omega_hat)
    ctx = make_context(data, Q, measure)
    A, D = ctx.weights.A, ctx.weights.D
    p = data.p

    if isinstance(opts.start, str):
        if opts.start == "gls":
            b0 = fit_gls(data, omega_hat).beta_hat
        elif opts.start == "ols":
            b0 = fit_ols(data).beta_hat
        else:
            raise ValidationError(f"unknown start {opts.start!r}")
    else:
        b0 = np.asarray(opts.start, dtype=float).ravel()
        if b0.size != p:
            raise ValidationError(f"start vector has length {b0.size}, expected {p}")

    r0 = ctx.ytil - ctx.Xtil @ b0
    if measure.kind == "lebesgue":
        def objective(u):
            return lebesgue_from_residuals(r0 - D @ u, D)
    else:
        def objective(u):
            return dispersion(ctx, b0 + A @ u)

    step = _residual_scale(r0)
    xatol = opts.tol * step
    cap = opts.iteration_cap(p)
    rng = np.random.default_rng(opts.seed)

    best_u = np.zeros(p)
    best_f = objective(best_u)
    f_start = best_f
    iterations = 0
    converged = False
    for run in range(opts.restarts + 1):
        if run == 0:
            dirs = np.eye(p)
        else:
            dirs, _ = np.linalg.qr(rng.standard_normal((p, p)))
        simplex = np.vstack([best_u, best_u + step * dirs])
        res = minimize(
            objective,
            best_u,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": xatol,
                "fatol": np.inf,
                "maxiter": cap,
                "maxfev": 4 * cap,
            },
        )
        iterations += int(res.nit)
        converged = bool(res.status == 0)
        if res.fun < best_f:
            best_u, best_f = np.asarray(res.x, dtype=float), float(res.fun)

    return EstimatorResult(
        beta_hat=b0 + A @ best_u,
        method=method,
        objective_value=float(min(best_f, f_start)),
        iterations=iterations,
        converged=converged,
        start=b0,
    )


@dataclass(frozen=True)
class OracleProcess:
    """Covariance implied by the generating linear process."""

    process: LinearProcessSpec = field(default_factory=LinearProcessSpec)
    innovation: InnovationDist = field(default_factory=InnovationDist.normal)


@dataclass(frozen=True)
class ToeplitzFromResiduals:
    """Banded Toeplitz matrix of sample autocovariances of OLS residuals."""

    max_lag: int = 2


def estimate_covariance(data: RegressionData, method) -> np.ndarray:
    n = data.n
    if isinstance(method, OracleProcess):
        gamma = analytic_autocovariance(method.process, method.innovation, n - 1)
        return sla.toeplitz(gamma)
    if isinstance(method, ToeplitzFromResiduals):
        if not 0 <= method.max_lag < n / 2:
            raise ValidationError(f"max_lag must be in [0, n/2), got {method.max_lag}")
        r = data.y - data.X @ fit_ols(data).beta_hat
        gamma = np.zeros(n)
        for h in range(method.max_lag + 1):
            gamma[h] = r[: n - h] @ r[h:] / n
        if gamma[0] <= 1e-24 * max(np.mean(data.y**2), 1e-300):
            raise NotPositiveDefiniteError("OLS residuals are numerically zero", eigenvalue=float(gamma[0]))
        omega = sla.toeplitz(gamma)
        # lift the smallest eigenvalue to the floor with a diagonal shift, which keeps Toeplitz form
        lam_min = np.linalg.eigvalsh(omega)[0]
        floor = 1e-8 * gamma[0]
        if lam_min < floor:
            omega[np.diag_indices(n)] += floor - lam_min
        return check_covariance(omega)
    raise ValidationError(f"unknown covariance method {method!r}")


def fit(data: RegressionData, method: str, omega_hat=None, measure=None, opts=None) -> EstimatorResult:
    """Dispatch on an estimator name (``OLS``, ``GLS``, ``GMD1``, ``GMD2``)."""
    method = method.upper()
    if method == "OLS":
        return fit_ols(data)
    if omega_hat is None:
        raise ValidationError(f"{method} needs a covariance matrix")
    if method == "GLS":
        return fit_gls(data, omega_hat)
    if method in GMD_TRANSFORMS:
        return fit_gmd(data, GMD_TRANSFORMS[method], omega_hat, measure, opts)
    raise ValidationError(f"unknown estimator {method!r}")
