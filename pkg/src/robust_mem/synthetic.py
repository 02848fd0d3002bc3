"""Synthetic measurement-error data: the linear and sigmoid simulation designs."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import DOMAIN_SIMULATE, ObservedDataset, derive_substream
from .models import linear_model, sigmoid_model

DEFAULTS = {
    "linear": {"n": 800, "theta0": (1.0, 0.0), "sigma_eps2": 4.0, "sigma_nu2": 4.0},
    "sigmoid": {"n": 500, "theta0": (0.0, 2.0, -5.0, 0.2), "sigma_eps2": 0.25, "sigma_nu2": 0.04},
}
X_RANGE = {"linear": (0.0, 10.0), "sigmoid": (0.0, 1.0)}
SIGMOID_SWEEP = (1e-8, 0.01, 0.04, 0.09)


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    x_true: np.ndarray
    theta0: tuple[float, ...]
    sigma_eps: float
    sigma_nu2: float
    generator: str
    seed: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["x_true"] = self.x_true[:, 0].tolist() if self.x_true.shape[1] == 1 else self.x_true.tolist()
        d["theta0"] = list(self.theta0)
        return d


def simulate(kind: str, seed: int = 0, **params) -> tuple[ObservedDataset, SyntheticTruth]:
    """Equidistant true covariates, Gaussian response noise, Gaussian covariate error."""
    if kind not in DEFAULTS:
        raise ValueError(f"unknown generator {kind!r}")
    unknown = set(params) - set(DEFAULTS[kind])
    if unknown:
        raise ValueError(f"unknown simulation parameters {sorted(unknown)}")
    p = {**DEFAULTS[kind], **params}
    n = int(p["n"])
    theta0 = tuple(float(t) for t in p["theta0"])
    sigma_eps = float(np.sqrt(p["sigma_eps2"]))
    sigma_nu2 = float(p["sigma_nu2"])
    lo, hi = X_RANGE[kind]
    x = np.linspace(lo, hi, n)[:, None]
    model = linear_model(1, True) if kind == "linear" else sigmoid_model()
    rng = derive_substream(seed, 0, 0, DOMAIN_SIMULATE)
    eps = rng.standard_normal(n)
    nu = rng.standard_normal((n, 1))
    y = model.eval(np.array(theta0), x) + sigma_eps * eps
    w = x + np.sqrt(sigma_nu2) * nu if sigma_nu2 > 0 else x.copy()
    ds = ObservedDataset(w, y, ("w_1", "y"))
    return ds, SyntheticTruth(x, theta0, sigma_eps, sigma_nu2, kind, int(seed))
