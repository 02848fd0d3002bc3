"""Closed-form MMD between a weighted atom measure and a Gaussian-response model.

The kernel on (x, y) is the product of two RBF kernels with lengthscales
``l_x`` and ``l_y``.  For a model whose response is N(g(theta, x), s^2) the
response expectations are available in closed form:

    E k_Y(Y, y0)  = sqrt(l^2/(l^2+s^2))   exp(-(mu-y0)^2 / (2(l^2+s^2)))
    E k_Y(Y, Y')  = sqrt(l^2/(l^2+2s^2))  exp(-(mu1-mu2)^2 / (2(l^2+2s^2)))

so the squared MMD is a deterministic function of theta with an exact
gradient.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .core import KernelConfig
from .dp import PseudoMeasure
from .models import RegressionModel


@dataclass(frozen=True, eq=False)
class FlatAtoms:
    """A pseudo-measure as one weighted list of (x, y) atoms.

    :meth:`with_gram` caches ``gram_x``, ``pair_weights`` = omega omega^T *
    gram_x and the data-data part of the MMD, all of which stay fixed while
    theta moves.
    """

    x: np.ndarray
    y: np.ndarray
    omega: np.ndarray
    gram_x: np.ndarray | None = None
    kernel: KernelConfig | None = None
    pair_weights: np.ndarray | None = None
    yy_term: float | None = None

    @property
    def M(self) -> int:
        return self.x.shape[0]

    def with_gram(self, kc: KernelConfig) -> "FlatAtoms":
        """Attach the x-Gram matrix and the theta-free data-data term for ``kc``."""
        if self.gram_x is not None and self.kernel == kc:
            return self
        G = rbf_gram(self.x, self.x, kc.l_x)
        W = np.outer(self.omega, self.omega) * G
        R = rbf_gram(self.y, self.y, kc.l_y)
        return FlatAtoms(self.x, self.y, self.omega, G, kc, W, float(np.sum(W * R)))


@dataclass(frozen=True)
class BoundInputs:
    n: int
    c: float
    Lambda: float
    l: float
    sigma1: float
    sigma2: float
    d: int = 1

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be >= 1")
        if self.c < 0 or self.Lambda < 0 or not np.isfinite(self.Lambda):
            raise ValueError("need c >= 0 and finite Lambda >= 0")
        if not self.l > 0 or self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("need l > 0 and nonnegative sigmas")


def flatten(pm: PseudoMeasure, drop_zero: bool = True) -> FlatAtoms:
    n, T1, d = pm.atoms_x.shape
    x = pm.atoms_x.reshape(n * T1, d)
    y = np.repeat(pm.y, T1)
    omega = pm.weights.reshape(-1) / n
    if drop_zero:
        keep = omega > 0
        x, y, omega = x[keep], y[keep], omega[keep]
    return FlatAtoms(np.ascontiguousarray(x), y, omega)


def rbf(u, v, l: float) -> float:
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    return float(np.exp(-np.sum((u - v) ** 2) / (2 * l * l)))


def rbf_gram(A, B, l: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    return np.exp(-cdist(A, B, "sqeuclidean") / (2 * l * l))


def gauss_cross_expectation(mu, sigma, y0, l):
    """E k(Y, y0) for Y ~ N(mu, sigma^2) and an RBF kernel of lengthscale l."""
    L = l * l + np.square(sigma)
    return np.sqrt(l * l / L) * np.exp(-np.square(np.subtract(mu, y0)) / (2 * L))


def gauss_pair_expectation(mu1, mu2, sigma, l):
    """E k(Y1, Y2) for independent Y1 ~ N(mu1, sigma^2), Y2 ~ N(mu2, sigma^2)."""
    L = l * l + 2 * np.square(sigma)
    return np.sqrt(l * l / L) * np.exp(-np.square(np.subtract(mu1, mu2)) / (2 * L))


def mmd2_model_vs_atoms(theta, model: RegressionModel, fa: FlatAtoms, kc: KernelConfig,
                        with_grad: bool = True):
    """Squared MMD between the atom measure and the model fitted on its atoms.

    The model side shares the atom x-marginal and draws Y | x from
    N(g(theta, x), sigma_eps^2).  Returns ``(value, gradient)``, or just the
    value when ``with_grad`` is false.
    """
    fa = fa.with_gram(kc)
    W = fa.pair_weights
    th, sig = model.split(theta)
    ly2 = kc.l_y * kc.l_y
    g = model.mean_fn(th, fa.x)

    L1 = ly2 + 2 * sig * sig
    L2 = ly2 + sig * sig
    dg = g[:, None] - g[None, :]
    P = np.sqrt(ly2 / L1) * np.exp(-dg * dg / (2 * L1))
    dc = g[:, None] - fa.y[None, :]
    C = np.sqrt(ly2 / L2) * np.exp(-dc * dc / (2 * L2))
    WP, WC = W * P, W * C
    value = float(WP.sum() - 2 * WC.sum() + fa.yy_term)
    if not with_grad:
        return value

    # d/dg_a: the model-model term is symmetric, hence the factor 2
    dval_dg = (-2.0 / L1) * np.sum(WP * dg, axis=1) + (2.0 / L2) * np.sum(WC * dc, axis=1)
    grad = model.jac_fn(th, fa.x).T @ dval_dg
    if model.learn_sigma:
        dP_dL1 = np.sum(WP * (-0.5 / L1 + dg * dg / (2 * L1 * L1)))
        dC_dL2 = np.sum(WC * (-0.5 / L2 + dc * dc / (2 * L2 * L2)))
        dsig = dP_dL1 * 4 * sig - 2 * dC_dL2 * 2 * sig
        grad = np.append(grad, dsig * sig)
    return value, grad


def product_rbf_kernel(kc: KernelConfig):
    """Gram function on joint points z = (x_1..x_d, y), y in the last column."""

    def k(Z1, Z2):
        Z1 = np.atleast_2d(Z1)
        Z2 = np.atleast_2d(Z2)
        return rbf_gram(Z1[:, :-1], Z2[:, :-1], kc.l_x) * rbf_gram(Z1[:, -1], Z2[:, -1], kc.l_y)

    return k


def _as_weighted(sample):
    if isinstance(sample, tuple):
        pts, w = sample
        w = np.asarray(w, dtype=np.float64)
    else:
        pts = sample
        w = None
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if w is None:
        w = np.full(len(pts), 1.0 / len(pts))
    return pts, w / w.sum()


def mmd2_empirical(A, Bsmp, kernel) -> float:
    """V-statistic MMD^2 between two weighted samples.

    Each sample is an array of points or a ``(points, weights)`` tuple;
    ``kernel(P, Q)`` returns the Gram matrix.
    """
    a, wa = _as_weighted(A)
    b, wb = _as_weighted(Bsmp)
    return float(wa @ kernel(a, a) @ wa - 2 * wa @ kernel(a, b) @ wb + wb @ kernel(b, b) @ wb)


def mmd2_linear_statistic(P1, P2, Q1, Q2, kernel_rows) -> tuple[float, float]:
    """Linear-time unbiased MMD^2 estimate and its standard error.

    ``P1, P2`` are independent draws from one law, ``Q1, Q2`` from the other;
    ``kernel_rows(U, V)`` evaluates k(U[r], V[r]) row by row.
    """
    h = kernel_rows(P1, P2) + kernel_rows(Q1, Q2) - kernel_rows(P1, Q2) - kernel_rows(P2, Q1)
    return float(h.mean()), float(h.std(ddof=1) / np.sqrt(h.size))


def mmd2_gaussians(sigma1: float, sigma2: float, l: float, d: int = 1,
                   squared_kernel: bool = False) -> float:
    """Population MMD^2 between N(0, sigma1^2 I) and N(0, sigma2^2 I) under RBF(l).

    ``squared_kernel`` uses the square of the RBF kernel, i.e. lengthscale l/sqrt(2).
    """
    lam2 = l * l / 2 if squared_kernel else l * l
    s1, s2 = sigma1 * sigma1, sigma2 * sigma2
    e = d / 2
    return (lam2 / (lam2 + 2 * s1)) ** e - 2 * (lam2 / (lam2 + s1 + s2)) ** e + (lam2 / (lam2 + 2 * s2)) ** e


def bound_constants(bi: BoundInputs) -> tuple[float, float]:
    """Prior-misspecification constant C1 and error-magnitude constant C2."""
    if bi.sigma1 == bi.sigma2:
        c1sq = 0.0
    else:
        c1sq = mmd2_gaussians(bi.sigma1, bi.sigma2, bi.l, bi.d, squared_kernel=True)
    c2sq = 2 - 2 * (bi.l ** 2 / (2 * bi.sigma1 ** 2 + bi.l ** 2)) ** (bi.d / 2)
    return float(np.sqrt(max(c1sq, 0.0))), float(np.sqrt(max(c2sq, 0.0)))


def bound_terms(bi: BoundInputs) -> dict:
    """Named pieces of the generalisation bound (each already scaled by 1 + 2 Lambda)."""
    C1, C2 = bound_constants(bi)
    a = 1 + 2 * bi.Lambda
    c = bi.c
    terms = {
        "sample_size": a * c / (np.sqrt(bi.n) * (c + 1)),
        "concentration": a * np.sqrt(1 / (c + 2)),
        "prior_specification": a * C1 * c / (c + 1),
        "me_deviation": a * C2 / (c + 1),
    }
    return {k: float(v) for k, v in terms.items()}


def generalisation_bound(bi: BoundInputs) -> float:
    t = bound_terms(bi)
    return t["sample_size"] + t["concentration"] + t["prior_specification"] + t["me_deviation"]


def subsample_atoms(fa: FlatAtoms, M_max: int, rng: np.random.Generator) -> FlatAtoms:
    """Multinomial resampling of at most ``M_max`` atoms with uniform weights."""
    if M_max < 2:
        raise ValueError("M_max must be >= 2")
    if fa.M <= M_max:
        return fa
    p = fa.omega / fa.omega.sum()
    idx = np.sort(rng.choice(fa.M, size=M_max, replace=True, p=p))
    return FlatAtoms(fa.x[idx], fa.y[idx], np.full(M_max, 1.0 / M_max))
