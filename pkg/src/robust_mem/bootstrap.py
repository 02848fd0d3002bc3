"""Posterior bootstrap drivers for the TLS and MMD losses, and posterior summaries.

Iterations are mapped over a thread pool and gathered in index order.  Every
random draw of iteration ``j`` comes from substreams keyed by ``(seed, j, .)``
so results do not depend on the worker count.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .baselines import SimexConfig, default_bounds, naive_fit, simex
from .core import (DOMAIN_RESTART, DOMAIN_SUBSAMPLE, DPConfig, ErrorPrior, KernelConfig,
                   ObservedDataset, PosteriorSamples, derive_substream)
from .dp import sample_pseudo_measure
from .mmd import flatten, mmd2_model_vs_atoms, subsample_atoms
from .models import RegressionModel
from .optimize import NonFiniteLoss, OptimizerConfig, adam_minimize, random_restart_init
from .tls import Degenerate, NonUnique, tls_solve, weighted_tls_solve

log = logging.getLogger(__name__)

METHODS = ("robust_tls", "robust_mmd", "ols", "tls_plain", "simex")
MAX_FAILURE_RATE = 0.05


class BootstrapFailed(RuntimeError):
    def __init__(self, failures, B):
        super().__init__(f"{len(failures)} of {B} bootstrap iterations failed")
        self.failures = failures


@dataclass(frozen=True)
class FitRequest:
    dataset: ObservedDataset
    model: RegressionModel
    method: str = "robust_tls"
    prior: ErrorPrior | None = None
    dp: DPConfig | None = None
    kernel: KernelConfig | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    atom_cap: int = 1024
    simex: SimexConfig | None = None
    warm_start: bool = True
    restart_every: int = 10
    model_spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method.startswith("robust_") and (self.prior is None or self.dp is None):
            raise ValueError(f"{self.method} needs prior and dp settings")
        if self.method == "robust_mmd" and self.kernel is None:
            raise ValueError("robust_mmd needs kernel settings")
        if self.method == "simex" and self.simex is None:
            raise ValueError("simex needs simex settings")
        if self.method in ("robust_tls", "tls_plain") and self.model.name != "linear":
            raise ValueError(f"{self.method} supports only the linear model, got {self.model.name}")

    def manifest(self) -> dict:
        out = {"method": self.method, "model": self.model.name, "model_spec": dict(self.model_spec),
               "p": self.model.n_params, "sigma_eps": self.model.sigma_eps,
               "learn_sigma": self.model.learn_sigma}
        for name in ("prior", "dp", "kernel", "simex"):
            v = getattr(self, name)
            if v is not None:
                out[name] = dict(v.__dict__)
        if self.method == "robust_mmd":
            out["optimizer"] = dict(self.optimizer.__dict__)
            out["atom_cap"] = self.atom_cap
            out["warm_start"] = self.warm_start
            out["restart_every"] = self.restart_every
        return out


def ordered_map(fn: Callable, items, workers: int = 1) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _collect(rows, req: FitRequest, method: str) -> PosteriorSamples:
    B = len(rows)
    failures = tuple((j, r) for j, (ok, r) in enumerate(rows) if not ok)
    if len(failures) > MAX_FAILURE_RATE * B:
        raise BootstrapFailed(failures, B)
    theta = np.array([r for ok, r in rows if ok], dtype=np.float64)
    return PosteriorSamples(theta, method, req.manifest(), failures)


def _with_intercept(model: RegressionModel) -> bool:
    return model.p == model.d_x + 1


def posterior_bootstrap_tls(req: FitRequest, workers: int = 1) -> PosteriorSamples:
    """B independent weighted-TLS fits, one per pseudo-measure draw."""
    if req.model.name != "linear":
        raise ValueError("the TLS loss needs the linear model")
    icpt = _with_intercept(req.model)

    def one(j):
        pm = sample_pseudo_measure(req.dataset, req.prior, req.dp, j)
        try:
            return True, weighted_tls_solve(pm, with_intercept=icpt).theta
        except (NonUnique, Degenerate) as e:
            return False, f"{type(e).__name__}: {e}"

    return _collect(ordered_map(one, range(req.dp.B), workers), req, "tls")


def _mmd_iteration(req: FitRequest, j: int, start, bounds):
    """One MMD bootstrap iteration; ``start`` None means random restarts."""
    pm = sample_pseudo_measure(req.dataset, req.prior, req.dp, j)
    fa = flatten(pm)
    fa = subsample_atoms(fa, req.atom_cap, derive_substream(req.dp.seed, j, 0, DOMAIN_SUBSAMPLE))
    fa = fa.with_gram(req.kernel)

    def f(theta):
        return mmd2_model_vs_atoms(theta, req.model, fa, req.kernel)

    if start is None:
        rng = derive_substream(req.dp.seed, j, 0, DOMAIN_RESTART)
        starts = random_restart_init(lambda t: mmd2_model_vs_atoms(t, req.model, fa, req.kernel, with_grad=False),
                                     bounds, req.optimizer, rng)
    else:
        starts = [start]
    best = None
    for s in starts:
        res = adam_minimize(f, s, req.optimizer)
        if best is None or res.loss < best.loss:
            best = res
    return best


def posterior_bootstrap_mmd(req: FitRequest, workers: int = 1) -> PosteriorSamples:
    """Minimum-MMD fits over B pseudo-measure draws.

    Iterations are processed in blocks of ``restart_every``: the first
    iteration of a block uses random restarts, later ones warm-start from the
    previous accepted estimate in the same block.  Blocks are independent,
    which keeps the output identical for any worker count.
    """
    B = req.dp.B
    bounds = default_bounds(req.model, req.dataset.w, req.dataset.y)
    step = req.restart_every if req.warm_start else 1

    def block(b0):
        out, prev = [], None
        for j in range(b0, min(b0 + step, B)):
            try:
                res = _mmd_iteration(req, j, prev, bounds)
                out.append((True, res.theta))
                prev = res.theta
            except (NonFiniteLoss, FloatingPointError, ValueError) as e:
                out.append((False, f"{type(e).__name__}: {e}"))
                prev = None
        return out

    rows = [r for blk in ordered_map(block, range(0, B, step), workers) for r in blk]
    return _collect(rows, req, "mmd")


def fit(req: FitRequest, workers: int = 1) -> PosteriorSamples:
    """Dispatch a request to its method; point-estimate methods give one row."""
    if req.method == "robust_tls":
        return posterior_bootstrap_tls(req, workers)
    if req.method == "robust_mmd":
        return posterior_bootstrap_mmd(req, workers)
    seed = req.dp.seed if req.dp is not None else 0
    if req.method == "ols":
        theta = naive_fit(req.dataset, req.model, "ols" if req.model.linear else "nonlinear_ls",
                          req.optimizer, seed=seed)
    elif req.method == "tls_plain":
        theta = tls_solve(req.dataset.w, req.dataset.y, with_intercept=_with_intercept(req.model)).theta
    else:
        fitter = "ols" if req.model.linear else "nonlinear_ls"
        theta = simex(req.dataset, req.model, fitter, req.simex, req.optimizer).theta
    return PosteriorSamples(np.atleast_2d(theta), req.method, req.manifest())


QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def summarize(ps: PosteriorSamples) -> list[dict]:
    """Per-parameter mean, sd and type-7 quantiles."""
    th = np.asarray(ps.theta, dtype=np.float64)
    if th.shape[0] < 1:
        raise ValueError("no posterior rows to summarise")
    qs = np.quantile(th, QUANTILES, axis=0)
    sd = th.std(axis=0, ddof=1) if th.shape[0] > 1 else np.zeros(th.shape[1])
    out = []
    for k in range(th.shape[1]):
        row = {"name": f"theta_{k + 1}", "mean": float(th[:, k].mean()), "sd": float(sd[k])}
        row.update({f"q{int(round(q * 100)):02d}": float(qs[i, k]) for i, q in enumerate(QUANTILES)})
        out.append(row)
    return out


def credible_band(ps: PosteriorSamples, model: RegressionModel, x_grid, level: float = 0.90,
                  curve: Callable | None = None) -> np.ndarray:
    """Pointwise (lo, mean, hi) of the fitted curve over ``x_grid``.

    ``curve(theta, x_grid)`` defaults to the model mean function.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    curve = curve or model.eval
    vals = np.array([curve(th, x_grid) for th in ps.theta])
    lo = np.quantile(vals, (1 - level) / 2, axis=0)
    hi = np.quantile(vals, (1 + level) / 2, axis=0)
    return np.column_stack([lo, vals.mean(axis=0), hi])
