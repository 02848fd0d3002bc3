"""Robust Bayesian regression under covariate measurement error.

Posterior bootstrap over Dirichlet-process pseudo-measures, with a
total-least-squares loss for linear models and a closed-form MMD loss for
Gaussian-response models; naive and SIMEX baselines; bound calculators.
"""
from .core import (DataError, DPConfig, ErrorPrior, KernelConfig, ObservedDataset, PosteriorSamples,
                   derive_substream, validate_dataset)
from .bootstrap import FitRequest, credible_band, fit, summarize
from .config import ConfigInvalid, parse_config

__all__ = ["DataError", "DPConfig", "ErrorPrior", "KernelConfig", "ObservedDataset", "PosteriorSamples",
           "derive_substream", "validate_dataset", "FitRequest", "credible_band", "fit", "summarize",
           "ConfigInvalid", "parse_config"]
__version__ = "0.1.0"
