"""Ordinary, total and weighted total least squares solvers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import norm

from .dp import PseudoMeasure

GAP_RTOL = 1e-10
V22_ATOL = 1e-12


class RankDeficient(np.linalg.LinAlgError):
    pass


class NonUnique(np.linalg.LinAlgError):
    """Smallest two singular values of the augmented matrix coincide."""


class Degenerate(np.linalg.LinAlgError):
    """The response component of the last right singular vector vanishes."""


@dataclass(frozen=True)
class TlsSolution:
    theta: np.ndarray
    sigma_gap: float
    objective: float
    singular_values: np.ndarray


def ols_solve(X, y, weights=None) -> np.ndarray:
    """Weighted least squares via a QR factorisation of the scaled design."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        keep = w > 0
        s = np.sqrt(w[keep])
        X, y = X[keep] * s[:, None], y[keep] * s
    n, d = X.shape
    if n < d:
        raise RankDeficient(f"{n} rows for {d} parameters")
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * max(diag.max(), 1e-300):
        raise RankDeficient("design matrix is numerically rank deficient")
    return solve_triangular(R, Q.T @ y)


def tls_solve(X, y, with_intercept: bool = False, weights=None) -> TlsSolution:
    """Total least squares through the SVD of the augmented matrix [X y].

    Rows are scaled by sqrt(weight) (uniform 1/n when ``weights`` is None);
    zero-weight rows are dropped.  With ``with_intercept`` the constant term
    is treated as error free: both columns are centred at their weighted
    means, the slope is solved by TLS and the intercept recovered afterwards.
    ``objective`` is the weighted profile objective at the solution.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, d = X.shape
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        keep = w > 0
        if not keep.all():
            X, y, w = X[keep], y[keep], w[keep]
    if X.shape[0] <= d:
        raise ValueError(f"need more than {d} rows, got {X.shape[0]}")
    w = w / w.sum()
    if with_intercept:
        xm = w @ X
        ym = w @ y
        Xc, yc = X - xm, y - ym
    else:
        Xc, yc = X, y
    s = np.sqrt(w)
    D = np.column_stack([Xc * s[:, None], yc * s])
    _, S, Vt = np.linalg.svd(D, full_matrices=False)
    gap = S[d - 1] - S[d]
    if not gap > GAP_RTOL * S[0]:
        raise NonUnique(f"singular value gap {gap:.3g} relative to {S[0]:.3g}")
    v22 = Vt[d, d]
    if abs(v22) <= V22_ATOL:
        raise Degenerate(f"|V22| = {abs(v22):.3g}")
    slope = -Vt[d, :d] / v22
    theta = np.append(slope, ym - slope @ xm) if with_intercept else slope
    return TlsSolution(theta, float(gap), float(S[d] ** 2), S)


def tls_profile_objective(theta, X, y, intercept: float = 0.0, weights=None) -> float:
    """sum_i w_i (y_i - theta.x_i - b)^2 / (1 + |theta|^2), unit weights by default."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    r = np.asarray(y, dtype=np.float64) - X @ theta - intercept
    if weights is not None:
        return float(np.sum(np.asarray(weights) * r ** 2) / (1.0 + theta @ theta))
    return float(r @ r / (1.0 + theta @ theta))


def flatten_for_tls(pm: PseudoMeasure) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n, T1, d = pm.atoms_x.shape
    return pm.atoms_x.reshape(n * T1, d), np.repeat(pm.y, T1), pm.weights.reshape(-1) / n


def weighted_tls_solve(pm: PseudoMeasure, with_intercept: bool = True) -> TlsSolution:
    """Minimise the xi-weighted TLS loss of a pseudo-measure.

    Each atom becomes the row sqrt(xi/n) * [x, y] of an augmented matrix.
    """
    X, y, w = flatten_for_tls(pm)
    return tls_solve(X, y, with_intercept=with_intercept, weights=w)


def tls_nll_equivalence_check(theta, nu, X, y) -> tuple[float, float]:
    """Return (TLS objective, joint Gaussian NLL) at unit noise scales.

    The latent covariates are x = X + nu; the NLL is that of
    w ~ N(x, 1) and y ~ N(theta.x, 1).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    nu = np.asarray(nu, dtype=np.float64).reshape(X.shape)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    x = X + nu
    tls_value = float(np.sum(nu ** 2) + np.sum((y - x @ theta) ** 2))
    nll = -float(np.sum(norm.logpdf(X, loc=x, scale=1.0)) + np.sum(norm.logpdf(y, loc=x @ theta, scale=1.0)))
    return tls_value, nll
