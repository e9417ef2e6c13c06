"""Asymptotic covariance diagnostics for the GMD estimator.

The scores are ``psi(x) = int_{-inf}^{-x} f dH - int_{-inf}^{x} f dH`` and, with
``f^H_ij = int f_i f_j dH``,

    Sigma    = A X' [ sum_ij dstar_ij f^H_ij q_i q_j' ] X A = D' (dstar o F^H) D,
    Asym     = 1/4 A Sigma^{-1} Sigma_ZZ Sigma^{-1} A,

where ``Sigma_ZZ = Cov(D' psi(Q eps))`` in the equal-density case. When all
transformed errors share one density, ``Sigma = |f|_H^2 I`` (since
``D'D = I``), and with uncorrelated transformed errors the covariance reduces
to ``tau (2 |f|_H^2)^{-2} (X'Q'QX)^{-1}`` with ``tau = Var psi(q_1' eps)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .error_model import InnovationDist, innovation_cdf, innovation_pdf
from .errors import IntegrationError, UnsupportedMeasureError, ValidationError
from .objective import IntegratingMeasure
from .transforms import WeightMatrices, build_weights

__all__ = [
    "DensitySpec",
    "AsymptoticReport",
    "psi",
    "density_l2_norm",
    "sigma_matrix",
    "sigma_matrix_equal_density",
    "estimate_sigma_zz",
    "asym_cov",
    "simplified_asym_cov",
    "estimate_tau",
    "diagnose",
]


@dataclass(frozen=True)
class DensitySpec:
    pdf: Callable
    cdf: Callable
    label: str = ""

    @classmethod
    def normal(cls, sigma=1.0):
        return cls(
            lambda x: stats.norm.pdf(x, scale=sigma),
            lambda x: stats.norm.cdf(x, scale=sigma),
            f"normal(sigma={sigma:g})",
        )

    @classmethod
    def from_innovation(cls, dist: InnovationDist):
        return cls(
            lambda x: innovation_pdf(dist, x),
            lambda x: innovation_cdf(dist, x),
            f"{dist.law}{dist.to_dict()}",
        )


def _require_supported(measure: IntegratingMeasure):
    if measure.kind == "degenerate":
        raise UnsupportedMeasureError("quadrature for |f|_H^2 and psi is unsupported for the degenerate measure")


def psi(dens: DensitySpec, measure: IntegratingMeasure, x):
    _require_supported(measure)
    x = np.asarray(x, dtype=float)
    if measure.kind == "lebesgue":
        return np.asarray(dens.cdf(-x) - dens.cdf(x), dtype=float)
    locs, mass = measure.atoms()
    fm = mass * dens.pdf(locs)
    xs = x.reshape(-1, 1)
    out = ((locs <= -xs) * fm).sum(axis=1) - ((locs <= xs) * fm).sum(axis=1)
    return out.reshape(x.shape)


def density_l2_norm(dens: DensitySpec, measure: IntegratingMeasure) -> float:
    """``|f|_H^2 = int f^2 dH``."""
    _require_supported(measure)
    if measure.kind == "discrete":
        locs, mass = measure.atoms()
        return float(mass @ np.asarray(dens.pdf(locs), dtype=float) ** 2)

    def f2(y):
        return float(dens.pdf(y)) ** 2

    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in ((-np.inf, 0.0), (0.0, np.inf)):
            val, err, info, *_ = integrate.quad(f2, lo, hi, epsabs=1e-10, epsrel=1e-10, limit=200, full_output=1)
            if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
                raise IntegrationError(f"|f|_H^2 integral did not converge (estimate {val}, error {err})")
            total += val
    return total


def sigma_matrix(weights: WeightMatrices, f_h) -> np.ndarray:
    """``D' (dstar o F^H) D`` for an ``n x n`` matrix (or scalar) of ``f^H_ij``."""
    D = weights.D
    F = np.broadcast_to(np.asarray(f_h, dtype=float), (D.shape[0], D.shape[0]))
    s = D.T @ (weights.dstar * F) @ D
    return 0.5 * (s + s.T)


def sigma_matrix_equal_density(weights: WeightMatrices, dens: DensitySpec, measure: IntegratingMeasure):
    return sigma_matrix(weights, density_l2_norm(dens, measure))


def estimate_sigma_zz(weights: WeightMatrices, dens: DensitySpec, measure: IntegratingMeasure, error_draws):
    """Monte Carlo ``Cov(D' psi(Q eps))`` from rows of ``error_draws`` (replicates x n)."""
    eps = np.atleast_2d(np.asarray(error_draws, dtype=float))
    if eps.shape[0] < 2:
        raise ValidationError("need at least 2 error draws")
    scores = psi(dens, measure, eps @ weights.Q.T) @ weights.D
    s = np.cov(scores, rowvar=False, ddof=1)
    return np.atleast_2d(0.5 * (s + s.T))


def asym_cov(weights: WeightMatrices, sigma, sigma_zz) -> np.ndarray:
    inv = np.linalg.inv(sigma)
    out = 0.25 * weights.A @ inv @ sigma_zz @ inv @ weights.A
    return 0.5 * (out + out.T)


def simplified_asym_cov(X, Q, dens: DensitySpec, tau: float, measure=None) -> np.ndarray:
    measure = measure or IntegratingMeasure.lebesgue()
    QX = np.asarray(Q, dtype=float) @ np.asarray(X, dtype=float)
    inv = np.linalg.inv(QX.T @ QX)
    out = tau * (2.0 * density_l2_norm(dens, measure)) ** -2 * inv
    return 0.5 * (out + out.T)


def estimate_tau(dens: DensitySpec, measure: IntegratingMeasure, samples) -> float:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise ValidationError("estimate_tau needs at least 2 samples")
    return float(np.var(psi(dens, measure, samples), ddof=1))


@dataclass
class AsymptoticReport:
    sigma: np.ndarray
    asym_cov: np.ndarray
    tau: float
    f_norm_sq: float
    label: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "tau": self.tau,
            "f_norm_sq": self.f_norm_sq,
            "sigma": np.asarray(self.sigma).tolist(),
            "asym_cov": np.asarray(self.asym_cov).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AsymptoticReport":
        return cls(
            sigma=np.asarray(d["sigma"], dtype=float),
            asym_cov=np.asarray(d["asym_cov"], dtype=float),
            tau=d["tau"],
            f_norm_sq=d["f_norm_sq"],
            label=d.get("label", ""),
        )


def diagnose(dens: DensitySpec, measure: IntegratingMeasure, samples, X=None, Q=None) -> AsymptoticReport:
    """Equal-density report; ``samples`` are draws of a transformed error.

    Without a design the covariance entries are per unit of ``(X'Q'QX)^{-1}``,
    i.e. the scalar ``tau (2 |f|_H^2)^{-2}``.
    """
    f_norm_sq = density_l2_norm(dens, measure)
    tau = estimate_tau(dens, measure, samples)
    if X is None:
        sigma = np.array([[f_norm_sq]])
        cov = np.array([[tau * (2.0 * f_norm_sq) ** -2]])
    else:
        Q = np.eye(np.asarray(X).shape[0]) if Q is None else Q
        weights = build_weights(X, Q)
        sigma = sigma_matrix(weights, f_norm_sq)
        cov = simplified_asym_cov(X, Q, dens, tau, measure)
    return AsymptoticReport(sigma=sigma, asym_cov=cov, tau=tau, f_norm_sq=f_norm_sq, label=dens.label)
