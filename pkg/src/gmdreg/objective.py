"""Cramer-von Mises type dispersion of a weighted, symmetrised residual process.

For a candidate ``b`` the transformed residuals are ``e(b) = Q (y - X b)`` and

    U_k(y, b) = sum_i d_ik [ I(e_i <= y) - I(-e_i < y) ],
    L(b)      = integral ||U(y, b)||^2 dH(y).

Under Lebesgue ``H`` the integral has the closed form
``sum_ij dstar_ij (|e_i + e_j| - |e_i - e_j|)`` with ``dstar = D D'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedMeasureError, ValidationError
from .transforms import WeightMatrices, build_weights

__all__ = [
    "RegressionData",
    "IntegratingMeasure",
    "DispersionContext",
    "make_context",
    "transformed_residuals",
    "u_process",
    "dispersion",
    "dispersion_lebesgue",
    "dispersion_kernel",
    "dispersion_quadrature",
    "lebesgue_from_residuals",
]


@dataclass(frozen=True)
class RegressionData:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValidationError(f"X must be 2-d, got shape {X.shape}")
        if X.shape[0] != y.size:
            raise ValidationError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        if X.shape[0] <= X.shape[1]:
            raise ValidationError(f"need n > p, got n={X.shape[0]}, p={X.shape[1]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValidationError("X and y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def has_intercept(self) -> bool:
        return bool(np.all(self.X[:, 0] == 1.0))


@dataclass(frozen=True)
class IntegratingMeasure:
    """Symmetric integrating measure.

    ``lebesgue``: dH(y) = dy. ``discrete``: atoms at ``+-points`` with
    ``weights`` each plus optional ``zero_mass`` at the origin. ``degenerate``:
    unit mass at 0.
    """

    kind: str = "lebesgue"
    points: tuple = ()
    weights: tuple = ()
    zero_mass: float = 0.0

    def __post_init__(self):
        if self.kind not in ("lebesgue", "discrete", "degenerate"):
            raise ValidationError(f"unknown measure kind {self.kind!r}")
        if self.kind == "discrete":
            pts = np.asarray(self.points, dtype=float)
            wts = np.asarray(self.weights, dtype=float)
            if pts.shape != wts.shape:
                raise ValidationError("points and weights must have equal length")
            if np.any(pts <= 0) or np.any(wts <= 0) or self.zero_mass < 0:
                raise ValidationError("discrete atoms need positive points and weights")
            if pts.size == 0 and self.zero_mass == 0:
                raise ValidationError("discrete measure has no atoms")

    @classmethod
    def lebesgue(cls):
        return cls("lebesgue")

    @classmethod
    def degenerate_at_zero(cls):
        return cls("degenerate")

    @classmethod
    def symmetric_discrete(cls, points, weights, zero_mass=0.0):
        return cls(
            "discrete",
            tuple(float(v) for v in np.ravel(points)),
            tuple(float(v) for v in np.ravel(weights)),
            float(zero_mass),
        )

    @classmethod
    def grid(cls, step: float, extent: float):
        """Midpoint-free Riemann grid approximating Lebesgue measure on [-extent, extent]."""
        pts = np.arange(step, extent + 0.5 * step, step)
        return cls.symmetric_discrete(pts, np.full(pts.size, step), zero_mass=step)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """All atom locations (mirrored) and their masses."""
        if self.kind == "lebesgue":
            raise UnsupportedMeasureError("Lebesgue measure has no atoms")
        if self.kind == "degenerate":
            return np.zeros(1), np.ones(1)
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        locs = np.concatenate((-pts[::-1], pts))
        mass = np.concatenate((wts[::-1], wts))
        if self.zero_mass > 0:
            locs = np.concatenate((locs, [0.0]))
            mass = np.concatenate((mass, [self.zero_mass]))
        return locs, mass


@dataclass(frozen=True)
class DispersionContext:
    data: RegressionData
    weights: WeightMatrices
    measure: IntegratingMeasure
    ytil: np.ndarray = field(repr=False)
    Xtil: np.ndarray = field(repr=False)

    @property
    def dstar(self) -> np.ndarray:
        return self.weights.dstar


def make_context(data: RegressionData, Q, measure: IntegratingMeasure | None = None):
    weights = build_weights(data.X, Q)
    return DispersionContext(
        data=data,
        weights=weights,
        measure=measure or IntegratingMeasure.lebesgue(),
        ytil=weights.Q @ data.y,
        Xtil=weights.Q @ data.X,
    )


def transformed_residuals(ctx: DispersionContext, b) -> np.ndarray:
    return ctx.ytil - ctx.Xtil @ np.asarray(b, dtype=float)


def u_process(ctx: DispersionContext, b, yval):
    """Evaluate ``U(yval, b)``; returns shape (p,) for scalar ``yval`` else (m, p)."""
    e = transformed_residuals(ctx, b)
    yv = np.asarray(yval, dtype=float)
    out = _u_sorted(e, ctx.weights.D, yv.ravel())
    return out[0] if yv.ndim == 0 else out


def _u_sorted(e: np.ndarray, D: np.ndarray, y: np.ndarray) -> np.ndarray:
    # cumulative weight of {i: e_i <= y} minus that of {i: -e_i < y}
    zero = np.zeros((1, D.shape[1]))
    up = np.argsort(e)
    cum_up = np.vstack([zero, np.cumsum(D[up], axis=0)])
    dn = np.argsort(-e)
    cum_dn = np.vstack([zero, np.cumsum(D[dn], axis=0)])
    k_up = np.searchsorted(e[up], y, side="right")
    k_dn = np.searchsorted(-e[dn], y, side="left")
    return cum_up[k_up] - cum_dn[k_dn]


def lebesgue_from_residuals(e: np.ndarray, D: np.ndarray) -> float:
    """Lebesgue dispersion for residuals ``e`` and weights ``D``.

    Uses ``|a+c| - |a-c| = 2 sgn(a) sgn(c) min(|a|,|c|)`` together with
    ``sum_ij w_i w_j min(a_i, a_j) = int_0^inf (sum_{a_i > t} w_i)^2 dt``,
    which is a sort plus suffix sums.
    """
    a = np.abs(e)
    order = np.argsort(a)
    a = a[order]
    w = D[order]
    w *= np.sign(e[order])[:, None]
    tail = w[::-1].cumsum(axis=0)[::-1]
    gaps = np.empty_like(a)
    gaps[0] = a[0]
    np.subtract(a[1:], a[:-1], out=gaps[1:])
    return 2.0 * float(gaps @ (tail * tail).sum(axis=1))


def dispersion_lebesgue(ctx: DispersionContext, b) -> float:
    if ctx.measure.kind != "lebesgue":
        raise UnsupportedMeasureError(f"dispersion_lebesgue needs Lebesgue measure, got {ctx.measure.kind}")
    return lebesgue_from_residuals(transformed_residuals(ctx, b), ctx.weights.D)


def dispersion_kernel(ctx: DispersionContext, b) -> float:
    """Pairwise form ``sum_ij dstar_ij (|e_i + e_j| - |e_i - e_j|)``, O(n^2)."""
    e = transformed_residuals(ctx, b)
    h = np.abs(e[:, None] + e[None, :]) - np.abs(e[:, None] - e[None, :])
    return float(np.sum(ctx.dstar * h))


def dispersion_quadrature(ctx: DispersionContext, b) -> float:
    if ctx.measure.kind == "lebesgue":
        raise UnsupportedMeasureError("use dispersion_lebesgue for Lebesgue measure")
    locs, mass = ctx.measure.atoms()
    U = u_process(ctx, b, locs)
    return float(mass @ np.einsum("ij,ij->i", U, U))


def dispersion(ctx: DispersionContext, b) -> float:
    if ctx.measure.kind == "lebesgue":
        return dispersion_lebesgue(ctx, b)
    return dispersion_quadrature(ctx, b)
