"""Dirichlet-approximation draws of the per-observation covariate posteriors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DOMAIN_DP, DPConfig, ErrorPrior, ObservedDataset, derive_substream


@dataclass(frozen=True, eq=False)
class PseudoMeasure:
    """One bootstrap draw of the pseudo-measure.

    ``atoms_x[i, t]`` for ``t < T`` is ``w_i + nu_t`` and ``atoms_x[i, T]`` is
    ``w_i`` itself; ``weights[i]`` is a point on the (T+1)-simplex.  The
    measure is the average over ``i`` of the weighted atoms paired with ``y_i``.
    """

    atoms_x: np.ndarray
    weights: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.atoms_x.shape[0]

    @property
    def T(self) -> int:
        return self.atoms_x.shape[1] - 1

    @property
    def d_x(self) -> int:
        return self.atoms_x.shape[2]


def sample_error(prior: ErrorPrior, count: int, rng: np.random.Generator,
                 d_x: int | None = None) -> np.ndarray:
    """Draw ``count`` i.i.d. error vectors from the prior (shape count x d_x)."""
    if d_x is None:
        d_x = len(prior.scale)
    if prior.kind == "point_mass":
        return np.zeros((count, d_x))
    scale = prior.scale_for(d_x)
    if prior.kind == "gaussian":
        z = rng.standard_normal((count, d_x))
    else:
        z = rng.standard_t(prior.df, size=(count, d_x))
    return z * scale


def sample_dirichlet_weights(c: float, T: int, rng: np.random.Generator) -> np.ndarray:
    """Draw from Dirichlet(c/T, ..., c/T, 1) on T+1 components.

    Gamma variates with shape a < 1 are generated in log space as
    log G(a+1) + log(U)/a so tiny shapes do not underflow before
    normalisation.  Zero shapes give exact zeros.
    """
    alpha = np.full(T + 1, c / T)
    alpha[-1] = 1.0
    logg = np.full(T + 1, -np.inf)
    pos = alpha > 0
    a = alpha[pos]
    small = a < 1.0
    g = rng.standard_gamma(np.where(small, a + 1.0, a))
    lg = np.log(g)
    if small.any():
        u = rng.random(int(small.sum()))
        with np.errstate(over="ignore", divide="ignore"):
            lg[small] += np.log(u) / a[small]
    logg[pos] = lg
    e = np.exp(logg - logg.max())
    return e / e.sum()


def sample_pseudo_measure(data: ObservedDataset, prior: ErrorPrior, dp: DPConfig, j: int,
                          deriver: Callable[..., np.random.Generator] = derive_substream) -> PseudoMeasure:
    n, d, T = data.n, data.d_x, int(dp.T)
    atoms = np.empty((n, T + 1, d))
    weights = np.empty((n, T + 1))
    for i in range(n):
        rng = deriver(dp.seed, j, i, DOMAIN_DP)
        atoms[i, :T] = data.w[i] + sample_error(prior, T, rng, d)
        atoms[i, T] = data.w[i]
        weights[i] = sample_dirichlet_weights(dp.c, T, rng)
    return PseudoMeasure(atoms, weights, np.array(data.y))
