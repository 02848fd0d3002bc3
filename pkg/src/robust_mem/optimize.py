"""Adam with random-restart initialisation, plus a finite-difference gradient check."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np


class NonFiniteLoss(FloatingPointError):
    def __init__(self, iteration: int, theta: np.ndarray):
        super().__init__(f"non-finite loss or gradient at iteration {iteration}, theta={theta!r}")
        self.iteration = iteration
        self.theta = theta


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 1e-3
    max_iters: int = 2000
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    restart_candidates: int = 100
    restart_keep: int = 3
    grad_tol: float = 1e-7
    patience: int = 200

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.max_iters >= 1 and self.patience >= 1):
            raise ValueError("learning_rate, max_iters and patience must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1 and self.eps_adam > 0):
            raise ValueError("Adam betas must lie in (0, 1) and eps_adam > 0")
        if not 1 <= self.restart_keep <= self.restart_candidates:
            raise ValueError("need 1 <= restart_keep <= restart_candidates")


class AdamResult(NamedTuple):
    theta: np.ndarray
    loss: float
    iterations: int
    trace: np.ndarray


def adam_minimize(loss_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
                  theta0, cfg: OptimizerConfig = OptimizerConfig()) -> AdamResult:
    """Minimise with Adam and return the best iterate seen.

    Stops after ``max_iters`` steps, when the gradient norm drops below
    ``grad_tol``, or after ``patience`` steps without a relative improvement
    of 1e-10 in the best loss.
    """
    theta = np.array(theta0, dtype=np.float64)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    best_theta, best = theta.copy(), np.inf
    stale = 0
    trace = []
    b1t = b2t = 1.0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        f, g = loss_and_grad(theta)
        g = np.asarray(g, dtype=np.float64)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise NonFiniteLoss(it, theta.copy())
        trace.append(f)
        if f < best - 1e-10 * abs(best) or best == np.inf:
            best, best_theta, stale = f, theta.copy(), 0
        else:
            stale += 1
        if np.linalg.norm(g) < cfg.grad_tol or stale >= cfg.patience:
            break
        b1t *= cfg.beta1
        b2t *= cfg.beta2
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        theta = theta - cfg.learning_rate * (m / (1 - b1t)) / (np.sqrt(v / (1 - b2t)) + cfg.eps_adam)
    return AdamResult(best_theta, float(best), it, np.asarray(trace))


def random_restart_init(loss: Callable[[np.ndarray], float], bounds, cfg: OptimizerConfig,
                        rng: np.random.Generator) -> np.ndarray:
    """Best ``restart_keep`` of ``restart_candidates`` uniform draws in the box, by loss."""
    bounds = np.asarray(bounds, dtype=np.float64)
    lo, hi = bounds[:, 0], bounds[:, 1]
    cand = lo + (hi - lo) * rng.random((cfg.restart_candidates, lo.size))
    vals = np.array([loss(c) for c in cand], dtype=np.float64)
    vals[~np.isfinite(vals)] = np.inf
    order = np.argsort(vals, kind="stable")
    return cand[order[:cfg.restart_keep]]


def grad_check(fn: Callable[[np.ndarray], tuple[float, np.ndarray]], theta, h: float = 1e-6) -> float:
    """Max relative error between fn's gradient and central differences."""
    theta = np.asarray(theta, dtype=np.float64)
    _, g = fn(theta)
    g = np.asarray(g, dtype=np.float64)
    worst = 0.0
    for k in range(theta.size):
        step = h * (1 + abs(theta[k]))
        e = np.zeros_like(theta)
        e[k] = step
        num = (fn(theta + e)[0] - fn(theta - e)[0]) / (2 * step)
        worst = max(worst, abs(g[k] - num) / (1e-12 + abs(num)))
    return worst
