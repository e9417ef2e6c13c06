"""Whitening transforms and the derived weight matrices.

Given an error covariance ``omega`` we build a transform ``Q`` with
``Q' Q = omega^{-1}`` (so ``Q omega Q' = I``), then the normalising matrix
``A = (X' Q' Q X)^{-1/2}`` and the design weights ``D = Q X A``, whose
columns are orthonormal.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .errors import NotPositiveDefiniteError, SingularDesignError, ValidationError

EIGEN_FLOOR = 1e-10
SYMMETRY_RTOL = 1e-12
MAX_CONDITION = 1e12

__all__ = [
    "TransformKind",
    "WeightMatrices",
    "check_covariance",
    "sym_inverse_sqrt",
    "cholesky_inverse_factor",
    "make_transform",
    "build_weights",
]


class TransformKind(str, Enum):
    SYMMETRIC_ROOT = "symmetric"  # GMD1
    CHOLESKY_FACTOR = "cholesky"  # GMD2
    IDENTITY = "identity"


def check_covariance(omega) -> np.ndarray:
    """Validate a covariance matrix and return it as a float array.

    Raises `ValidationError` for non-square or asymmetric input and
    `NotPositiveDefiniteError` when the smallest eigenvalue is at or below
    ``EIGEN_FLOOR`` times the largest. Nothing is clamped.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise ValidationError(f"covariance must be square, got shape {omega.shape}")
    scale = np.abs(omega).max() if omega.size else 0.0
    if np.abs(omega - omega.T).max(initial=0.0) > SYMMETRY_RTOL * max(scale, 1e-300):
        raise ValidationError("covariance matrix is not symmetric")
    _positive_eigh(omega)
    return omega


def _positive_eigh(omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, vecs = np.linalg.eigh(omega)
    top = lam[-1]
    if top <= 0 or lam[0] <= EIGEN_FLOOR * top:
        raise NotPositiveDefiniteError(
            f"covariance is not positive definite: smallest eigenvalue {lam[0]:.6g} "
            f"(largest {top:.6g})",
            eigenvalue=float(lam[0]),
        )
    return lam, vecs


def sym_inverse_sqrt(omega) -> np.ndarray:
    """Symmetric inverse square root ``V diag(lam^{-1/2}) V'``."""
    omega = np.asarray(omega, dtype=float)
    lam, vecs = _positive_eigh(omega)
    q = (vecs * lam ** -0.5) @ vecs.T
    return 0.5 * (q + q.T)


def cholesky_inverse_factor(omega) -> np.ndarray:
    """Inverse lower Cholesky factor.

    With ``omega = L L'`` this returns ``Q = L^{-1}`` (lower triangular), which
    satisfies ``Q' Q = omega^{-1}`` and ``Q omega Q' = I``.
    """
    omega = check_covariance(omega)
    lower = np.linalg.cholesky(omega)
    return sla.solve_triangular(lower, np.eye(omega.shape[0]), lower=True)


def make_transform(kind: TransformKind | str, omega) -> np.ndarray:
    kind = TransformKind(kind)
    if kind is TransformKind.SYMMETRIC_ROOT:
        return sym_inverse_sqrt(check_covariance(omega))
    if kind is TransformKind.CHOLESKY_FACTOR:
        return cholesky_inverse_factor(omega)
    n = np.asarray(omega).shape[0]
    return np.eye(n)


@dataclass(frozen=True)
class WeightMatrices:
    """Transform ``Q`` with normaliser ``A``, weights ``D = QXA`` and row norms ``theta``."""

    Q: np.ndarray
    A: np.ndarray
    D: np.ndarray
    theta: np.ndarray

    @property
    def dstar(self) -> np.ndarray:
        return self.D @ self.D.T


def build_weights(X, Q) -> WeightMatrices:
    X = np.asarray(X, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if X.ndim != 2 or Q.shape != (X.shape[0], X.shape[0]):
        raise ValidationError(f"incompatible shapes X{X.shape}, Q{Q.shape}")
    QX = Q @ X
    gram = QX.T @ QX
    gram = 0.5 * (gram + gram.T)
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularDesignError(f"X'Q'QX is singular (condition number {cond:.3g})")
    A = sym_inverse_sqrt(gram)
    D = QX @ A
    return WeightMatrices(Q=Q, A=A, D=D, theta=np.linalg.norm(D, axis=1))
