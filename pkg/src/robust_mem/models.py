"""Parametric mean functions g(theta, x) with analytic Jacobians.

All mean functions are vectorised over points: ``X`` has shape (m, d_x) and
``eval`` returns an (m,) array, ``jacobian`` an (m, p) array.  Responses are
Gaussian around the mean with standard deviation ``sigma_eps``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import expit


class OutOfRange(ValueError):
    def __init__(self, i: int, x: float):
        super().__init__(f"x[{i}] = {x!r} lies outside the knot span")
        self.i = i


def as_rows(x, d_x: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1) if d_x == 1 else x.reshape(1, -1)
    return x


@dataclass(frozen=True)
class RegressionModel:
    """A Gaussian-response regression family.

    With ``learn_sigma`` set, parameter vectors carry one extra trailing entry,
    ``log(sigma_eps)``; only the MMD path understands it.
    """

    name: str
    p: int
    d_x: int
    mean_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jac_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sigma_eps: float = 1.0
    theta_bounds: np.ndarray | None = None
    learn_sigma: bool = False
    linear: bool = False

    def __post_init__(self):
        if not self.sigma_eps > 0:
            raise ValueError("sigma_eps must be positive")

    @property
    def n_params(self) -> int:
        return self.p + int(self.learn_sigma)

    def split(self, theta) -> tuple[np.ndarray, float]:
        """Return (mean-function parameters, sigma_eps) for a parameter vector."""
        theta = np.asarray(theta, dtype=np.float64)
        if self.learn_sigma:
            return theta[:self.p], float(np.exp(theta[self.p]))
        return theta, self.sigma_eps

    def eval(self, theta, x) -> np.ndarray:
        th, _ = self.split(theta)
        return self.mean_fn(th, as_rows(x, self.d_x))

    def jacobian(self, theta, x) -> np.ndarray:
        th, _ = self.split(theta)
        return self.jac_fn(th, as_rows(x, self.d_x))

    def with_sigma(self, sigma_eps: float | None = None, learn_sigma: bool | None = None) -> "RegressionModel":
        kw = {}
        if sigma_eps is not None:
            kw["sigma_eps"] = float(sigma_eps)
        if learn_sigma is not None:
            kw["learn_sigma"] = bool(learn_sigma)
        return replace(self, **kw)


def linear_model(d_x: int = 1, with_intercept: bool = True, sigma_eps: float = 1.0) -> RegressionModel:
    if d_x < 1:
        raise ValueError("d_x must be >= 1")

    def mean(th, X):
        out = X @ th[:d_x]
        return out + th[d_x] if with_intercept else out

    def jac(th, X):
        return np.column_stack([X, np.ones(len(X))]) if with_intercept else np.array(X)

    return RegressionModel("linear", d_x + int(with_intercept), d_x, mean, jac,
                           sigma_eps=sigma_eps, linear=True)


def sigmoid_model(sigma_eps: float = 0.5) -> RegressionModel:
    """g = K + B / (1 + exp(A (x - m))) with theta = (K, B, A, m)."""

    def mean(th, X):
        K, B, A, m = th
        return K + B * expit(-A * (X[:, 0] - m))

    def jac(th, X):
        K, B, A, m = th
        u = X[:, 0] - m
        s = expit(-A * u)
        ds = s * expit(A * u)  # s(1-s) without cancellation
        return np.column_stack([np.ones_like(s), s, -B * ds * u, B * ds * A])

    bounds = np.array([[-5.0, 5.0]] * 4)
    return RegressionModel("sigmoid", 4, 1, mean, jac, sigma_eps=sigma_eps, theta_bounds=bounds)


@dataclass(frozen=True)
class SplineBasisSpec:
    K: int = 10
    knot_lo: float = -3.0
    knot_hi: float = 12.74

    def __post_init__(self):
        if self.K < 3:
            raise ValueError("need K >= 3 knots")
        if not self.knot_hi > self.knot_lo:
            raise ValueError("knot_hi must exceed knot_lo")

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(self.knot_lo, self.knot_hi, self.K)


def bspline_basis(x, spec: SplineBasisSpec) -> np.ndarray:
    """Quadratic B-spline basis on K equidistant knots, shape (n, K+1).

    A point in knot interval [t_j, t_{j+1}] with local coordinate w gets
    (1-w)^2/2, -w^2+w+1/2 and w^2/2 in columns j, j+1, j+2.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    t = spec.knots
    bad = np.flatnonzero(~((x >= t[0]) & (x <= t[-1])))
    if bad.size:
        raise OutOfRange(int(bad[0]), float(x[bad[0]]))
    j = np.clip(np.searchsorted(t, x, side="right") - 1, 0, spec.K - 2)
    w = (x - t[j]) / (t[j + 1] - t[j])
    out = np.zeros((x.size, spec.K + 1))
    rows = np.arange(x.size)
    out[rows, j] = (1 - w) ** 2 / 2
    out[rows, j + 1] = -(w ** 2) + w + 0.5
    out[rows, j + 2] = w ** 2 / 2
    return out


def bspline_model(spec: SplineBasisSpec, sigma_eps: float = 1.0) -> RegressionModel:
    def mean(th, X):
        return bspline_basis(X[:, 0], spec) @ th

    def jac(th, X):
        return bspline_basis(X[:, 0], spec)

    return RegressionModel("bspline", spec.K + 1, 1, mean, jac, sigma_eps=sigma_eps, linear=True)


def bspline_init(spec: SplineBasisSpec, w) -> np.ndarray:
    """Coefficients u = pinv(B_w) w, i.e. the spline closest to the identity map."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    return np.linalg.pinv(bspline_basis(w, spec)) @ w


def quantile_knots(x, K: int = 15) -> np.ndarray:
    """K knots at equally spaced interior quantiles of x."""
    probs = np.linspace(0, 1, K + 2)[1:-1]
    return np.quantile(np.asarray(x, dtype=np.float64), probs)


def truncated_lines(x, knots) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1, 1)
    return np.maximum(x - np.asarray(knots)[None, :], 0.0)


def ate_design(x, group, knots) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Design blocks (X, Z0, Z1); group is 1 for placebo, 0 for treatment."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    I = np.asarray(group, dtype=np.float64).reshape(-1)
    if not np.all((I == 0) | (I == 1)):
        raise ValueError("group flag must be 0 or 1")
    Z = truncated_lines(x, knots)
    X = np.column_stack([np.ones_like(x), x, 1 - I, (1 - I) * x])
    return X, I[:, None] * Z, (1 - I)[:, None] * Z


def ate_model(knots, sigma_eps: float = 1.0) -> RegressionModel:
    """Penalised-spline treatment model over covariates (x, I).

    theta = (beta0, beta1, beta0_drug, beta1_drug, u0[K], u1[K]).
    """
    knots = np.asarray(knots, dtype=np.float64)
    K = knots.size

    def jac(th, X):
        Xd, Z0, Z1 = ate_design(X[:, 0], X[:, 1], knots)
        return np.hstack([Xd, Z0, Z1])

    def mean(th, X):
        return jac(th, X) @ th

    return RegressionModel("ate", 4 + 2 * K, 2, mean, jac, sigma_eps=sigma_eps, linear=True)


def ate_eval(theta, x, knots) -> np.ndarray:
    """Average treatment effect curve at baseline scores x."""
    theta = np.asarray(theta, dtype=np.float64)
    knots = np.asarray(knots, dtype=np.float64)
    K = knots.size
    u0, u1 = theta[4:4 + K], theta[4 + K:4 + 2 * K]
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return theta[2] + theta[3] * x + truncated_lines(x, knots) @ (u1 - u0)
