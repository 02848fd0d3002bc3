"""JSON run configuration with strict keys and JSON-pointer diagnostics.

A config describes one fit: method, model, prior, DP settings, kernel,
optimizer, SIMEX settings, seed, atom cap and an optional credible band.
Missing optional blocks take their defaults; unknown keys are errors.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import SimexConfig
from .bootstrap import METHODS, FitRequest
from .core import DPConfig, ErrorPrior, KernelConfig, ObservedDataset
from .models import (SplineBasisSpec, ate_model, bspline_model, linear_model, quantile_knots,
                     sigmoid_model)
from .optimize import OptimizerConfig


class ConfigInvalid(ValueError):
    def __init__(self, pointer: str, reason: str):
        super().__init__(f"{pointer or '/'}: {reason}")
        self.pointer = pointer
        self.reason = reason


# field spec: (type tag, default, check); REQUIRED marks a mandatory field
REQUIRED = object()


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


MODEL_FIELDS = {
    "linear": {"with_intercept": ("bool", True, None), "sigma_eps": ("num", 1.0, _pos),
               "learn_sigma": ("bool", False, None), "d_x": ("int", 1, _pos)},
    "sigmoid": {"sigma_eps": ("num", 0.5, _pos), "learn_sigma": ("bool", False, None)},
    "bspline": {"K": ("int", 10, lambda v: v >= 3), "knot_lo": ("num", -3.0, None),
                "knot_hi": ("num", 12.74, None), "sigma_eps": ("num", 1.0, _pos),
                "learn_sigma": ("bool", False, None)},
    "ate": {"K": ("int", 15, _pos), "knots": ("numlist", None, None), "sigma_eps": ("num", 1.0, _pos),
            "learn_sigma": ("bool", False, None)},
}
PRIOR_FIELDS = {"kind": ("str", "student_t", lambda v: v in ("gaussian", "student_t", "point_mass")),
                "scale": ("numlist", [1.0], lambda v: all(s >= 0 for s in v)),
                "df": ("num", None, _pos)}
DP_FIELDS = {"c": ("num", 1.0, _nonneg), "T": ("int", 100, _pos), "B": ("int", 500, _pos)}
KERNEL_FIELDS = {"l_x": ("num", 1.0, _pos), "l_y": ("num", 1.0, _pos)}
OPTIMIZER_FIELDS = {
    "learning_rate": ("num", 1e-3, _pos), "max_iters": ("int", 2000, _pos),
    "beta1": ("num", 0.9, lambda v: 0 < v < 1), "beta2": ("num", 0.999, lambda v: 0 < v < 1),
    "eps_adam": ("num", 1e-8, _pos), "restart_candidates": ("int", 100, _pos),
    "restart_keep": ("int", 3, _pos), "grad_tol": ("num", 1e-7, _nonneg),
    "patience": ("int", 200, _pos), "warm_start": ("bool", True, None),
    "restart_every": ("int", 10, _pos),
}
SIMEX_FIELDS = {"sigma_nu2": ("num", REQUIRED, _nonneg), "lambda_grid": ("numlist", [0.5, 1.0, 1.5, 2.0], None),
                "B_sim": ("int", 100, _pos)}
BAND_FIELDS = {"grid_lo": ("num", REQUIRED, None), "grid_hi": ("num", REQUIRED, None),
               "points": ("int", 50, lambda v: v >= 2), "level": ("num", 0.9, lambda v: 0 < v < 1)}
TOP_FIELDS = {"method", "model", "prior", "dp", "kernel", "optimizer", "simex", "seed", "atom_cap", "band"}

PRESETS = {
    "mental_health": {
        "method": "robust_mmd",
        "model": {"name": "ate", "K": 15, "sigma_eps": 1.0},
        "prior": {"kind": "gaussian", "scale": [1.0, 0.0]},
        "dp": {"c": 50, "T": 100, "B": 200},
        "kernel": {"l_x": 10.0, "l_y": 10.0},
        "optimizer": {"learning_rate": 0.001},
        "seed": 0,
    },
    "eats": {
        "method": "robust_mmd",
        "model": {"name": "bspline", "K": 10, "knot_lo": -3.0, "knot_hi": 12.74, "sigma_eps": 1.0},
        "prior": {"kind": "gaussian", "scale": [1.0]},
        "dp": {"c": 100, "T": 100, "B": 500},
        "kernel": {"l_x": 100.0, "l_y": 100.0},
        "optimizer": {"learning_rate": 0.5},
        "seed": 0,
    },
}


def _typed(value, tag, ptr):
    def num(v, p):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigInvalid(p, f"expected a number, got {type(v).__name__}")
        if not np.isfinite(v):
            raise ConfigInvalid(p, "must be finite")
        return float(v)

    if tag == "num":
        return num(value, ptr)
    if tag == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid(ptr, f"expected an integer, got {type(value).__name__}")
        return value
    if tag == "bool":
        if not isinstance(value, bool):
            raise ConfigInvalid(ptr, "expected true or false")
        return value
    if tag == "str":
        if not isinstance(value, str):
            raise ConfigInvalid(ptr, "expected a string")
        return value
    if tag == "numlist":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not value:
            raise ConfigInvalid(ptr, "expected a non-empty list of numbers")
        return [num(v, f"{ptr}/{k}") for k, v in enumerate(value)]
    raise AssertionError(tag)


def _block(raw, fields: dict, ptr: str, ignore=()) -> dict:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigInvalid(ptr, "expected an object")
    for k in raw:
        if k not in fields and k not in ignore:
            raise ConfigInvalid(f"{ptr}/{k}", "unknown key")
    out = {}
    for k, (tag, default, check) in fields.items():
        p = f"{ptr}/{k}"
        if k not in raw or raw[k] is None:
            if default is REQUIRED:
                raise ConfigInvalid(p, "required field missing")
            out[k] = copy.deepcopy(default)
            continue
        v = _typed(raw[k], tag, p)
        if check is not None and not check(v):
            raise ConfigInvalid(p, f"invalid value {raw[k]!r}")
        out[k] = v
    return out


@dataclass(frozen=True)
class RunConfig:
    """A validated config; :meth:`request` binds it to a dataset."""

    method: str
    model: dict
    prior: ErrorPrior | None
    dp: DPConfig
    kernel: KernelConfig | None
    optimizer: OptimizerConfig
    simex: SimexConfig | None
    seed: int
    atom_cap: int
    warm_start: bool
    restart_every: int
    band: dict | None = None
    raw: dict = field(default_factory=dict)

    def build_model(self, dataset: ObservedDataset | None = None):
        m = dict(self.model)
        name = m.pop("name")
        sig, learn = m.pop("sigma_eps"), m.pop("learn_sigma")
        if name == "linear":
            model = linear_model(m["d_x"], m["with_intercept"], sig)
        elif name == "sigmoid":
            model = sigmoid_model(sig)
        elif name == "bspline":
            model = bspline_model(SplineBasisSpec(m["K"], m["knot_lo"], m["knot_hi"]), sig)
        else:
            knots = m["knots"]
            if knots is None:
                if dataset is None:
                    raise ConfigInvalid("/model/knots", "no knots given and no data to place them")
                knots = quantile_knots(dataset.w[:, 0], m["K"])
            model = ate_model(np.asarray(knots), sig)
        return model.with_sigma(learn_sigma=learn) if learn else model

    def request(self, dataset: ObservedDataset) -> FitRequest:
        model = self.build_model(dataset)
        if dataset.d_x != model.d_x:
            raise ConfigInvalid("/model", f"model expects {model.d_x} covariate columns, data has {dataset.d_x}")
        spec = dict(self.model)
        if spec["name"] == "ate" and spec["knots"] is None:
            spec["knots"] = [float(k) for k in quantile_knots(dataset.w[:, 0], spec["K"])]
        return FitRequest(dataset, model, self.method, self.prior, self.dp, self.kernel, self.optimizer,
                          self.atom_cap, self.simex, self.warm_start, self.restart_every, spec)


def parse_config(source, seed_override: int | None = None) -> RunConfig:
    """Validate a config given as a path, a JSON string or a dict."""
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigInvalid("", f"malformed JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigInvalid("", "top level must be an object")
    for k in raw:
        if k not in TOP_FIELDS:
            raise ConfigInvalid(f"/{k}", "unknown key")

    method = raw.get("method")
    if method is None:
        raise ConfigInvalid("/method", "required field missing")
    if method not in METHODS:
        raise ConfigInvalid("/method", f"unknown method {method!r}; expected one of {', '.join(METHODS)}")

    m = raw.get("model")
    if not isinstance(m, dict) or "name" not in m:
        raise ConfigInvalid("/model/name", "required field missing")
    if m["name"] not in MODEL_FIELDS:
        raise ConfigInvalid("/model/name", f"unknown model {m['name']!r}")
    model = _block(m, MODEL_FIELDS[m["name"]], "/model", ignore=("name",))
    model["name"] = m["name"]
    if method in ("robust_tls", "tls_plain") and model["name"] != "linear":
        raise ConfigInvalid("/model/name", f"{method} supports only the linear model")

    prior = None
    if method.startswith("robust_"):
        pb = _block(raw.get("prior"), PRIOR_FIELDS, "/prior")
        if pb["kind"] == "student_t" and pb["df"] is None:
            pb["df"] = 3.0
        if pb["kind"] != "point_mass" and max(pb["scale"]) <= 0:
            raise ConfigInvalid("/prior/scale", "at least one scale entry must be positive")
        prior = ErrorPrior(pb["kind"], tuple(pb["scale"]), pb["df"])
    elif "prior" in raw:
        _block(raw["prior"], PRIOR_FIELDS, "/prior")

    seed = raw.get("seed", 0)
    if seed_override is not None:
        seed = seed_override
    seed = _typed(seed, "int", "/seed")
    if seed < 0:
        raise ConfigInvalid("/seed", "must be >= 0")
    dpb = _block(raw.get("dp"), DP_FIELDS, "/dp")
    dp = DPConfig(dpb["c"], dpb["T"], dpb["B"], seed)

    kernel = None
    if method == "robust_mmd" or "kernel" in raw:
        kb = _block(raw.get("kernel"), KERNEL_FIELDS, "/kernel")
        kernel = KernelConfig(kb["l_x"], kb["l_y"])

    ob = _block(raw.get("optimizer"), OPTIMIZER_FIELDS, "/optimizer")
    warm, every = ob.pop("warm_start"), ob.pop("restart_every")
    if ob["restart_keep"] > ob["restart_candidates"]:
        raise ConfigInvalid("/optimizer/restart_keep", "must not exceed restart_candidates")
    optimizer = OptimizerConfig(**ob)

    simex = None
    if method == "simex":
        if "simex" not in raw:
            raise ConfigInvalid("/simex/sigma_nu2", "required field missing")
        sb = _block(raw["simex"], SIMEX_FIELDS, "/simex")
        try:
            simex = SimexConfig(sb["sigma_nu2"], tuple(sb["lambda_grid"]), sb["B_sim"], seed)
        except ValueError as e:
            raise ConfigInvalid("/simex/lambda_grid", str(e)) from None
    elif "simex" in raw:
        _block(raw["simex"], SIMEX_FIELDS, "/simex")

    atom_cap = _typed(raw.get("atom_cap", 1024), "int", "/atom_cap")
    if atom_cap < 2:
        raise ConfigInvalid("/atom_cap", "must be >= 2")

    band = None
    if "band" in raw:
        band = _block(raw["band"], BAND_FIELDS, "/band")
        if not band["grid_hi"] > band["grid_lo"]:
            raise ConfigInvalid("/band/grid_hi", "must exceed grid_lo")
    if model["name"] == "bspline" and not model["knot_hi"] > model["knot_lo"]:
        raise ConfigInvalid("/model/knot_hi", "must exceed knot_lo")

    return RunConfig(method, model, prior, dp, kernel, optimizer, simex, seed, atom_cap, warm, every,
                     band, raw)


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    return copy.deepcopy(PRESETS[name])
