"""Shared domain types, dataset validation and RNG substream derivation.

Substreams
----------
Every random draw in a bootstrap run comes from a stream keyed by
``(seed, j, i, domain)``.  The key is a 64-bit value obtained by absorbing
each component into a SplitMix64 finalizer::

    h = mix64(seed)
    h = mix64(h ^ j)
    h = mix64(h ^ i)
    h = mix64(h ^ domain)

where ``mix64`` is the SplitMix64 step (add the golden-gamma constant
``0x9E3779B97F4A7C15`` then the (30, 27, 31) xor-shift-multiply finalizer).
The key seeds a counter-based Philox generator, so the stream depends only
on the key and never on the order in which streams are created.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1

# domain tags for derive_substream; keep stable, they are part of the
# reproducibility contract
DOMAIN_DP = 0
DOMAIN_RESTART = 1
DOMAIN_SUBSAMPLE = 2
DOMAIN_SIMEX = 3
DOMAIN_SIMULATE = 4


class DataError(ValueError):
    """Raised when an input table cannot be turned into a dataset."""


class EmptyTable(DataError):
    pass


class RaggedRows(DataError):
    def __init__(self, row: int, expected: int, got: int):
        super().__init__(f"row {row} has {got} columns, expected {expected}")
        self.row = row


class NonFinite(DataError):
    def __init__(self, row: int, col: int):
        super().__init__(f"non-finite value at row {row}, col {col}")
        self.row = row
        self.col = col


@dataclass(frozen=True, eq=False)
class ObservedDataset:
    """Covariate observations ``w`` (n x d_x) paired with scalar responses ``y``."""

    w: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim == 1:
            w = w[:, None]
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise EmptyTable("need at least one row and one covariate column")
        if w.shape[0] != y.shape[0]:
            raise DataError(f"w has {w.shape[0]} rows but y has {y.shape[0]}")
        w.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def d_x(self) -> int:
        return self.w.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ObservedDataset):
            return NotImplemented
        return (np.array_equal(self.w, other.w) and np.array_equal(self.y, other.y)
                and self.column_names == other.column_names)

    def table(self) -> np.ndarray:
        return np.column_stack([self.w, self.y])


@dataclass(frozen=True)
class ErrorPrior:
    """Prior centering law for the measurement error.

    ``scale`` is per covariate dimension.  A zero entry marks an error-free
    column (e.g. a treatment indicator); at least one entry must be positive
    for the gaussian and student_t kinds.
    """

    kind: str = "gaussian"
    scale: tuple[float, ...] = (1.0,)
    df: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "student_t", "point_mass"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        scale = tuple(float(s) for s in np.atleast_1d(self.scale))
        object.__setattr__(self, "scale", scale)
        if self.kind == "point_mass":
            return
        if any(not np.isfinite(s) or s < 0 for s in scale) or max(scale) <= 0:
            raise ValueError("prior scale entries must be finite, >= 0, and not all zero")
        if self.kind == "student_t":
            if self.df is None or not self.df > 0:
                raise ValueError("student_t prior needs df > 0")

    def scale_for(self, d_x: int) -> np.ndarray:
        s = np.asarray(self.scale, dtype=np.float64)
        if s.size == 1:
            return np.full(d_x, s[0])
        if s.size != d_x:
            raise ValueError(f"prior has {s.size} scale entries for {d_x} covariates")
        return s


@dataclass(frozen=True)
class DPConfig:
    c: float = 1.0
    T: int = 100
    B: int = 500
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c >= 0):
            raise ValueError("c must be finite and >= 0")
        if int(self.T) < 1 or int(self.B) < 1:
            raise ValueError("T and B must be >= 1")


@dataclass(frozen=True)
class KernelConfig:
    l_x: float = 1.0
    l_y: float = 1.0

    def __post_init__(self):
        for name in ("l_x", "l_y"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite")


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """Bootstrap parameter draws.

    ``theta`` holds the successful rows in iteration order; iterations that
    failed (degenerate SVD, non-finite loss) are listed in ``failures`` as
    ``(j, reason)`` pairs and excluded from ``theta``.
    """

    theta: np.ndarray
    method: str
    manifest: dict = field(default_factory=dict)
    failures: tuple[tuple[int, str], ...] = ()

    @property
    def B(self) -> int:
        return self.theta.shape[0]

    @property
    def p(self) -> int:
        return self.theta.shape[1]


def validate_dataset(raw: Sequence[Sequence[float]] | np.ndarray,
                     column_names: Sequence[str] | None = None) -> ObservedDataset:
    """Turn a numeric table (last column = response) into an ObservedDataset."""
    if isinstance(raw, ObservedDataset):
        return ObservedDataset(raw.w, raw.y, raw.column_names)
    if isinstance(raw, np.ndarray):
        if raw.ndim != 2:
            raise EmptyTable("expected a 2-d table")
        rows = raw
        ncol = raw.shape[1]
    else:
        rows = list(raw)
        if not rows:
            raise EmptyTable("table has no rows")
        ncol = len(rows[0])
        for r, row in enumerate(rows):
            if len(row) != ncol:
                raise RaggedRows(r, ncol, len(row))
    if len(rows) == 0:
        raise EmptyTable("table has no rows")
    if ncol < 2:
        raise EmptyTable("need at least one covariate column and a response column")
    table = np.asarray(rows, dtype=np.float64)
    bad = np.argwhere(~np.isfinite(table))
    if bad.size:
        r, c = bad[0]
        raise NonFinite(int(r), int(c))
    names = tuple(column_names) if column_names is not None else None
    return ObservedDataset(table[:, :-1], table[:, -1], names)


def mix64(x: int) -> int:
    """One SplitMix64 step."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def substream_key(seed: int, j: int, i: int, domain: int = DOMAIN_DP) -> int:
    h = mix64(int(seed) & MASK64)
    h = mix64(h ^ (int(j) & MASK64))
    h = mix64(h ^ (int(i) & MASK64))
    return mix64(h ^ (int(domain) & MASK64))


def derive_substream(seed: int, j: int, i: int, domain: int = DOMAIN_DP) -> np.random.Generator:
    """Independent generator for observation ``i`` of bootstrap iteration ``j``."""
    return np.random.Generator(np.random.Philox(key=substream_key(seed, j, i, domain)))
