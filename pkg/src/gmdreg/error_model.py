"""Strongly mixing error sequences built from a truncated linear filter.

The errors are ``eps_t = g0 * xi_t + sum_{v=1}^{V} v^{-kappa} xi_{t-v}`` with
i.i.d. symmetric innovations ``xi``. For ``kappa > 7`` and finite second
moments the mixing numbers decay fast enough that ``sum k^2 alpha(k)``
converges.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import ValidationError

__all__ = [
    "InnovationDist",
    "LinearProcessSpec",
    "innovation_variance",
    "innovation_pdf",
    "innovation_cdf",
    "sample_innovations",
    "filter_innovations",
    "generate_errors",
    "analytic_autocovariance",
    "mixing_rate_exponent",
]

LAWS = ("normal", "laplace", "logistic", "mixture")
SHORT_NAMES = {"normal": "N", "laplace": "La", "logistic": "Lo", "mixture": "M"}


@dataclass(frozen=True)
class InnovationDist:
    """Zero-centred innovation law.

    ``scale`` is the standard deviation for ``normal`` and the scale parameter
    for ``laplace``/``logistic``. The ``mixture`` law is
    ``(1 - eps) N(0, sigma_a^2) + eps N(0, sigma_b^2)``.
    """

    law: str
    scale: float = 1.0
    eps: float = 0.0
    sigma_a: float = 0.0
    sigma_b: float = 0.0

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValidationError(f"unknown innovation law {self.law!r}; expected one of {LAWS}")
        if self.law == "mixture":
            if not (0.0 <= self.eps <= 1.0) or self.sigma_a <= 0 or self.sigma_b <= 0:
                raise ValidationError("mixture needs 0 <= eps <= 1 and positive sigmas")
        elif self.scale <= 0:
            raise ValidationError(f"{self.law} scale must be positive, got {self.scale}")

    @classmethod
    def normal(cls, sigma=2.0):
        return cls("normal", scale=float(sigma))

    @classmethod
    def laplace(cls, s=5.0):
        return cls("laplace", scale=float(s))

    @classmethod
    def logistic(cls, s=5.0):
        return cls("logistic", scale=float(s))

    @classmethod
    def mixture(cls, eps=0.1, sigma_a=2.0, sigma_b=10.0):
        return cls("mixture", eps=float(eps), sigma_a=float(sigma_a), sigma_b=float(sigma_b))

    @classmethod
    def study_default(cls, law: str) -> "InnovationDist":
        """The four innovation settings used in the simulation tables."""
        defaults = {
            "normal": cls.normal,
            "laplace": cls.laplace,
            "logistic": cls.logistic,
            "mixture": cls.mixture,
        }
        if law not in defaults:
            raise ValidationError(f"unknown innovation law {law!r}; expected one of {LAWS}")
        return defaults[law]()

    @property
    def short_name(self) -> str:
        return SHORT_NAMES[self.law]

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.law == "mixture":
            del d["scale"]
        else:
            for k in ("eps", "sigma_a", "sigma_b"):
                del d[k]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InnovationDist":
        d = dict(d)
        law = d.pop("law", None)
        if law is None:
            raise ValidationError("innovation entry needs a 'law' key")
        if not d:
            return cls.study_default(law)
        if "sigma" in d:
            d["scale"] = d.pop("sigma")
        if "s" in d:
            d["scale"] = d.pop("s")
        unknown = set(d) - {"scale", "eps", "sigma_a", "sigma_b"}
        if unknown:
            raise ValidationError(f"unknown innovation keys: {sorted(unknown)}")
        return cls(law, **{k: float(v) for k, v in d.items()})


def innovation_variance(dist: InnovationDist) -> float:
    s = dist.scale
    if dist.law == "normal":
        return s * s
    if dist.law == "laplace":
        return 2.0 * s * s
    if dist.law == "logistic":
        return s * s * math.pi**2 / 3.0
    return (1.0 - dist.eps) * dist.sigma_a**2 + dist.eps * dist.sigma_b**2


def innovation_pdf(dist: InnovationDist, x):
    x = np.asarray(x, dtype=float)
    if dist.law == "normal":
        return stats.norm.pdf(x, scale=dist.scale)
    if dist.law == "laplace":
        return np.exp(-np.abs(x) / dist.scale) / (2.0 * dist.scale)
    if dist.law == "logistic":
        z = np.exp(-np.abs(x) / dist.scale)
        return z / (dist.scale * (1.0 + z) ** 2)
    return (1.0 - dist.eps) * stats.norm.pdf(x, scale=dist.sigma_a) + dist.eps * stats.norm.pdf(
        x, scale=dist.sigma_b
    )


def innovation_cdf(dist: InnovationDist, x):
    x = np.asarray(x, dtype=float)
    if dist.law == "normal":
        return stats.norm.cdf(x, scale=dist.scale)
    if dist.law == "laplace":
        return stats.laplace.cdf(x, scale=dist.scale)
    if dist.law == "logistic":
        return stats.logistic.cdf(x, scale=dist.scale)
    return (1.0 - dist.eps) * stats.norm.cdf(x, scale=dist.sigma_a) + dist.eps * stats.norm.cdf(
        x, scale=dist.sigma_b
    )


def sample_innovations(dist: InnovationDist, count: int, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise ValidationError("count must be >= 1")
    if dist.law == "normal":
        return rng.normal(0.0, dist.scale, count)
    if dist.law == "laplace":
        return rng.laplace(0.0, dist.scale, count)
    if dist.law == "logistic":
        return rng.logistic(0.0, dist.scale, count)
    wide = rng.random(count) < dist.eps
    sd = np.where(wide, dist.sigma_b, dist.sigma_a)
    return sd * rng.standard_normal(count)


@dataclass(frozen=True)
class LinearProcessSpec:
    """Power-law linear filter ``g_0 = g0``, ``g_v = v^{-kappa}`` for ``1 <= v <= V``."""

    kappa: float = 7.5
    g0: float = 1.0
    truncation: int = 50

    def __post_init__(self):
        if self.kappa <= 7:
            raise ValidationError(f"kappa must exceed 7 for the mixing-rate condition, got {self.kappa}")
        if self.truncation < 0 or int(self.truncation) != self.truncation:
            raise ValidationError("truncation must be a non-negative integer")
        if self.truncation > 0 and self.truncation ** -self.kappa > 1e-12:
            raise ValidationError(
                f"truncation V={self.truncation} leaves g_V={self.truncation ** -self.kappa:.3g} > 1e-12"
            )

    def coefficients(self) -> np.ndarray:
        v = np.arange(1, self.truncation + 1, dtype=float)
        return np.concatenate(([self.g0], v ** -self.kappa))


def mixing_rate_exponent(kappa: float, delta: float = 2.0) -> float:
    """Decay exponent ``eta`` of the mixing numbers, ``alpha(k) = O(k^-eta)``."""
    return (kappa * delta - max(delta, 1.0)) / (1.0 + delta) - 1.0


def filter_innovations(spec: LinearProcessSpec, xi: np.ndarray) -> np.ndarray:
    """Apply the filter to ``xi``; the first ``V`` entries are pre-sample draws."""
    g = spec.coefficients()
    xi = np.asarray(xi, dtype=float)
    if xi.size < g.size:
        raise ValidationError(f"need at least {g.size} innovations, got {xi.size}")
    return np.convolve(xi, g, mode="valid")


def generate_errors(
    spec: LinearProcessSpec, dist: InnovationDist, n: int, rng: np.random.Generator
) -> np.ndarray:
    if n < 1:
        raise ValidationError("n must be >= 1")
    xi = sample_innovations(dist, n + spec.truncation, rng)
    return filter_innovations(spec, xi)


def analytic_autocovariance(
    spec: LinearProcessSpec, dist: InnovationDist, max_lag: int
) -> np.ndarray:
    if max_lag < 0:
        raise ValidationError("max_lag must be >= 0")
    g = spec.coefficients()
    gamma = np.zeros(max_lag + 1)
    for h in range(min(max_lag, spec.truncation) + 1):
        gamma[h] = g[: g.size - h] @ g[h:]
    return innovation_variance(dist) * gamma
