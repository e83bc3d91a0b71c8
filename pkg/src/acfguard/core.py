"""Domain types shared by every module, and the quality-measure catalogue."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernels as K


class AcfGuardError(Exception):
    """Base class for errors raised by this package."""


class DegenerateACFError(AcfGuardError):
    """A lag window has zero variance, so its correlation is undefined."""

    def __init__(self, lag: int, detail: str = ""):
        self.lag = lag
        msg = f"degenerate ACF at lag {lag}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class SingularRecursionError(AcfGuardError):
    def __init__(self, lag: int):
        self.lag = lag
        super().__init__(f"singular DL step at lag {lag}")


class ConfigError(AcfGuardError, ValueError):
    pass


class FormatError(AcfGuardError, ValueError):
    pass


class StatKind(str, enum.Enum):
    ACF = "acf"
    PACF = "pacf"

    @property
    def code(self) -> int:
        return K.ACF if self is StatKind.ACF else K.PACF


class QualityMeasure(str, enum.Enum):
    MAE = "mae"
    RMSE = "rmse"
    NRMSE = "nrmse"
    MSMAPE = "msmape"
    MAPE = "mape"
    CHEB = "cheb"

    @property
    def code(self) -> int:
        return _MEASURE_CODES[self]


_MEASURE_CODES = {
    QualityMeasure.MAE: K.MAE,
    QualityMeasure.RMSE: K.RMSE,
    QualityMeasure.NRMSE: K.NRMSE,
    QualityMeasure.MSMAPE: K.MSMAPE,
    QualityMeasure.MAPE: K.MAPE,
    QualityMeasure.CHEB: K.CHEB,
}


class AggKind(str, enum.Enum):
    NONE = "none"
    MEAN = "mean"
    SUM = "sum"
    MIN = "min"
    MAX = "max"

    @property
    def code(self) -> int:
        return list(AggKind).index(self)


def _finite_vector(values, name="values") -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValueError(f"{name} contains a non-finite value at position {bad}")
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Equidistant, finite samples; the unit of compression."""

    values: np.ndarray

    def __post_init__(self):
        arr = _finite_vector(self.values)
        if arr.shape[0] < 2:
            raise ValueError("a time series needs at least 2 samples")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def of(cls, data) -> "TimeSeries":
        return data if isinstance(data, TimeSeries) else cls(data)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CompressedSeries:
    """Surviving points of a compressed series.

    ``indices`` are 0-based positions into the original series; the first
    and last position are always present.
    """

    indices: np.ndarray
    values: np.ndarray
    n: int
    stat: StatKind = StatKind.ACF
    lags: int = 1
    window: int = 1
    agg: AggKind = AggKind.NONE
    epsilon: float = 0.0
    metric: QualityMeasure = QualityMeasure.MAE

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or idx.shape != vals.shape:
            raise FormatError("indices and values must be 1-d and of equal length")
        if idx.shape[0] < 2:
            raise FormatError("at least the two endpoints must be kept")
        if idx[0] != 0 or idx[-1] != self.n - 1:
            raise FormatError("kept points must include the first and last index")
        if np.any(np.diff(idx) <= 0):
            raise FormatError("kept indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "stat", StatKind(self.stat))
        object.__setattr__(self, "agg", AggKind(self.agg))
        object.__setattr__(self, "metric", QualityMeasure(self.metric))

    @property
    def n_kept(self) -> int:
        return int(self.indices.shape[0])

    @property
    def compression_ratio(self) -> float:
        return self.n / self.n_kept


@dataclass
class CompressionReport:
    method: str
    config: dict[str, Any]
    n: int
    n_kept: int
    cr: float
    bits_per_value: float
    acf_deviation: dict[str, float | None]
    nrmse: float | None
    msmape: float | None
    runtime_ms: float | None
    verification: dict[str, Any]
    status: str = "ok"
    message: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.verification.get("passed", False))


def msmape_smoothing(a) -> np.ndarray:
    """Running mean absolute deviation S_i of the prefix a[:i] (S_0 = 0)."""
    return K.running_mad(np.ascontiguousarray(a, dtype=np.float64))


def measure(kind, a, b) -> float:
    """Distance between two equal-length sequences under the given measure.

    ``a`` is the reference: NRMSE normalises by its range, MAPE divides by
    its entries and mSMAPE smooths with its running deviation.
    """
    kind = QualityMeasure(kind)
    a = _finite_vector(a, "a")
    b = _finite_vector(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 1:
        raise ValueError("measures need at least one element")
    err = a - b
    if kind is QualityMeasure.MAE:
        return float(np.mean(np.abs(err)))
    if kind is QualityMeasure.CHEB:
        return float(np.max(np.abs(err)))
    if kind in (QualityMeasure.RMSE, QualityMeasure.NRMSE):
        rmse = float(np.sqrt(np.mean(err * err)))
        if kind is QualityMeasure.RMSE:
            return rmse
        span = float(np.max(a) - np.min(a))
        if span <= 0.0:
            raise ValueError("NRMSE undefined: reference has zero range")
        return rmse / span
    if kind is QualityMeasure.MAPE:
        if np.any(a == 0.0):
            pos = int(np.flatnonzero(a == 0.0)[0])
            raise ValueError(f"MAPE undefined: zero reference value at position {pos}")
        return float(np.mean(np.abs(err) / np.abs(a)))
    if a.shape[0] < 2:
        raise ValueError("mSMAPE needs at least two elements")
    den = np.abs(a + b) / 2.0 + msmape_smoothing(a)
    terms = np.divide(np.abs(err), den, out=np.zeros_like(den), where=den != 0.0)
    return float(np.mean(terms))


def measure_context(kind, ref) -> tuple[np.ndarray, float]:
    """Validate a fixed reference vector once; returns (smoothing, scale)."""
    kind = QualityMeasure(kind)
    ref = np.asarray(ref, dtype=np.float64)
    smooth = np.zeros_like(ref)
    scale = 1.0
    if kind is QualityMeasure.NRMSE:
        scale = float(np.max(ref) - np.min(ref))
        if scale <= 0.0:
            raise ConfigError("NRMSE undefined: reference statistic has zero range")
    elif kind is QualityMeasure.MAPE:
        if np.any(ref == 0.0):
            raise ConfigError("MAPE undefined: reference statistic has a zero entry")
    elif kind is QualityMeasure.MSMAPE:
        smooth = msmape_smoothing(ref)
    return smooth, scale
