"""Naive fits that ignore measurement error, and SIMEX."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DOMAIN_RESTART, DOMAIN_SIMEX, ObservedDataset, derive_substream
from .models import RegressionModel
from .optimize import OptimizerConfig, adam_minimize, random_restart_init
from .tls import ols_solve


class ExtrapolationIllConditioned(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class SimexConfig:
    sigma_nu2: float
    lambda_grid: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    B_sim: int = 100
    seed: int = 0

    def __post_init__(self):
        grid = tuple(float(v) for v in self.lambda_grid)
        object.__setattr__(self, "lambda_grid", grid)
        if not self.sigma_nu2 >= 0:
            raise ValueError("sigma_nu2 must be >= 0")
        if not grid or any(v <= 0 for v in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda_grid must be positive and strictly ascending")
        if self.B_sim < 1:
            raise ValueError("B_sim must be >= 1")


@dataclass(frozen=True)
class SimexResult:
    theta: np.ndarray
    lambdas: np.ndarray
    trajectory: np.ndarray  # (len(lambdas), p), first row is lambda = 0


def squared_error_loss(model: RegressionModel, w, y):
    w = np.asarray(w)
    y = np.asarray(y)

    def f(theta):
        r = y - model.mean_fn(theta, w)
        return float(r @ r / len(y)), -2.0 / len(y) * (model.jac_fn(theta, w).T @ r)

    return f


def default_bounds(model: RegressionModel, w, y, halfwidth: float = 2.0) -> np.ndarray:
    """Restart box: the model's own bounds, else +-halfwidth around a linear initialiser."""
    if model.theta_bounds is not None:
        b = np.asarray(model.theta_bounds, dtype=np.float64)
    else:
        w = np.asarray(w, dtype=np.float64)
        if model.name == "bspline":
            # identity-map initialiser u = pinv(B_w) w
            centre = np.linalg.pinv(model.jac_fn(None, w)) @ w[:, 0]
        else:
            centre = np.linalg.pinv(model.jac_fn(np.zeros(model.p), w)) @ np.asarray(y)
        b = np.column_stack([centre - halfwidth, centre + halfwidth])
    if model.learn_sigma:
        ls = np.log(model.sigma_eps)
        b = np.vstack([b, [ls - 1.0, ls + 1.0]])
    return b


def naive_fit(dataset: ObservedDataset, model: RegressionModel, fitter: str = "ols",
              cfg: OptimizerConfig | None = None, seed: int = 0) -> np.ndarray:
    """Fit the model to (w, y) as if w were error free."""
    if fitter == "ols":
        if not model.linear:
            raise ValueError(f"ols fitter needs a linear-in-parameters model, got {model.name}")
        return ols_solve(model.jac_fn(np.zeros(model.p), dataset.w), dataset.y)
    if fitter != "nonlinear_ls":
        raise ValueError(f"unknown fitter {fitter!r}")
    cfg = cfg or OptimizerConfig()
    plain = model.with_sigma(learn_sigma=False)
    f = squared_error_loss(plain, dataset.w, dataset.y)
    bounds = default_bounds(plain, dataset.w, dataset.y)
    starts = random_restart_init(lambda t: f(t)[0], bounds, cfg,
                                 derive_substream(seed, 0, 0, DOMAIN_RESTART))
    best = None
    for s in starts:
        res = adam_minimize(f, s, cfg)
        if best is None or res.loss < best.loss:
            best = res
    return best.theta


def quadratic_extrapolate(lambdas, values, at: float = -1.0) -> np.ndarray:
    """Per-column quadratic least-squares fit in lambda, evaluated at ``at``."""
    lam = np.asarray(lambdas, dtype=np.float64)
    centre = lam.mean()
    V = np.vander(lam - centre, 3, increasing=True)
    if np.unique(lam).size < 3 or np.linalg.cond(V) > 1e12:
        raise ExtrapolationIllConditioned("need at least three well-separated lambda values")
    coef, *_ = np.linalg.lstsq(V, np.asarray(values, dtype=np.float64), rcond=None)
    d = at - centre
    return coef[0] + coef[1] * d + coef[2] * d * d


def simex(dataset: ObservedDataset, model: RegressionModel, fitter: str, sc: SimexConfig,
          cfg: OptimizerConfig | None = None) -> SimexResult:
    """Simulation-extrapolation with a quadratic extrapolant at lambda = -1."""
    naive = naive_fit(dataset, model, fitter, cfg, seed=sc.seed)
    lambdas = np.concatenate([[0.0], sc.lambda_grid])
    if sc.sigma_nu2 == 0:
        traj = np.tile(naive, (lambdas.size, 1))
        return SimexResult(naive.copy(), lambdas, traj)
    rows = [naive]
    for k, lam in enumerate(sc.lambda_grid):
        sd = np.sqrt(lam * sc.sigma_nu2)
        fits = []
        for b in range(sc.B_sim):
            rng = derive_substream(sc.seed, k, b, DOMAIN_SIMEX)
            w_b = dataset.w + sd * rng.standard_normal(dataset.w.shape)
            fits.append(naive_fit(ObservedDataset(w_b, dataset.y), model, fitter, cfg, seed=sc.seed))
        rows.append(np.mean(fits, axis=0))
    traj = np.vstack(rows)
    return SimexResult(quadratic_extrapolate(lambdas, traj), lambdas, traj)
