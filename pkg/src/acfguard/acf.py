"""ACF/PACF from scratch and incrementally maintained lag aggregates.

Indices are 0-based.  For lag ``l`` the leading window is ``a[0:N-l]`` and
the lagged window is ``a[l:N]``; every aggregate is a plain sum over those
windows, so an edit only ever touches the pairs it participates in.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import AggKind, ConfigError, DegenerateACFError, SingularRecursionError, StatKind, TimeSeries


@dataclass(frozen=True)
class AcfAggregates:
    """The five per-lag running sums over a sequence of length ``n``."""

    sx: np.ndarray
    sx_l: np.ndarray
    sx2: np.ndarray
    sx2_l: np.ndarray
    sxx_l: np.ndarray
    n: int

    @property
    def lags(self) -> int:
        return self.sx.shape[0]

    def matrix(self) -> np.ndarray:
        return np.vstack([self.sx, self.sx_l, self.sx2, self.sx2_l, self.sxx_l])

    @classmethod
    def from_matrix(cls, S: np.ndarray, n: int) -> "AcfAggregates":
        S = np.array(S, dtype=np.float64)
        return cls(S[0], S[1], S[2], S[3], S[4], int(n))


@dataclass(frozen=True)
class WindowAggregates:
    """Tumbling-window aggregates ``a[i] = agg(x[i*k:(i+1)*k])``."""

    a: np.ndarray
    window: int
    agg: AggKind


def _values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return np.ascontiguousarray(series, dtype=np.float64)


def _check_lags(n: int, L: int) -> None:
    if L < 1:
        raise ConfigError("lag count must be positive")
    if L >= n:
        raise ConfigError(f"series too short for window/lag configuration (n={n}, L={L})")


def acf_scratch(series, L: int) -> np.ndarray:
    """Centred two-window Pearson ACF for lags 1..L."""
    x = _values(series)
    _check_lags(x.shape[0], L)
    out = np.empty(L)
    bad = K.acf_two_pass(x, L, out)
    if bad:
        raise DegenerateACFError(bad)
    return out


def pacf_from_acf(rho) -> np.ndarray:
    """Partial autocorrelations phi_{l,l} via the Durbin-Levinson recursion."""
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    if rho.ndim != 1 or rho.shape[0] < 1:
        raise ValueError("need at least one autocorrelation")
    out = np.empty_like(rho)
    bad = K.pacf_from_rho(rho, out)
    if bad:
        raise SingularRecursionError(bad)
    return out


def statistic(series, L: int, stat=StatKind.ACF) -> np.ndarray:
    rho = acf_scratch(series, L)
    if StatKind(stat) is StatKind.PACF:
        return pacf_from_acf(rho)
    return rho


def extract_aggregates(series, L: int) -> AcfAggregates:
    x = _values(series)
    _check_lags(x.shape[0], L)
    S = np.empty((5, L))
    K.lag_sums(x, L, S)
    return AcfAggregates.from_matrix(S, x.shape[0])


def get_acf(agg: AcfAggregates) -> np.ndarray:
    out = np.empty(agg.lags)
    bad = K.acf_from_sums(agg.matrix(), agg.n, out)
    if bad:
        raise DegenerateACFError(bad)
    return out


def apply_multi_delta(agg: AcfAggregates, values, start: int, deltas) -> AcfAggregates:
    """Aggregates after adding ``deltas`` to ``values[start:start+m]``.

    ``values`` is the sequence *before* the edit; lagged partners are read
    from it and the overlapping-delta cross terms are added explicitly.
    """
    x = _values(values)
    d = np.ascontiguousarray(deltas, dtype=np.float64)
    if d.ndim != 1 or d.shape[0] < 1:
        raise ValueError("need at least one delta")
    stop = start + d.shape[0] - 1
    if start < 0 or stop >= x.shape[0]:
        raise IndexError("edited span outside the series")
    S = agg.matrix()
    K.accumulate(S, x, start, stop, d, agg.n)
    return AcfAggregates.from_matrix(S, agg.n)


def apply_single_delta(agg: AcfAggregates, values, i: int, delta: float) -> AcfAggregates:
    return apply_multi_delta(agg, values, i, np.array([delta]))


def window_aggregate(series, window: int, agg=AggKind.MEAN) -> WindowAggregates:
    x = _values(series)
    agg = AggKind(agg)
    if window < 1:
        raise ConfigError("window must be positive")
    if agg is AggKind.NONE and window != 1:
        raise ConfigError("agg 'none' requires window 1")
    if x.shape[0] < 2 * window:
        raise ConfigError("series too short for window/lag configuration")
    N = x.shape[0] // window
    blocks = x[: N * window].reshape(N, window)
    if agg in (AggKind.NONE, AggKind.MEAN):
        a = blocks.mean(axis=1) if window > 1 else blocks[:, 0].copy()
    elif agg is AggKind.SUM:
        a = blocks.sum(axis=1)
    elif agg is AggKind.MIN:
        a = blocks.min(axis=1)
    else:
        a = blocks.max(axis=1)
    return WindowAggregates(np.ascontiguousarray(a), window, agg)


def apply_delta_aggregated(
    wagg: WindowAggregates, agg: AcfAggregates, values, start: int, deltas
) -> tuple[WindowAggregates, AcfAggregates]:
    """Propagate raw-point edits to the window values and their aggregates.

    Mean and sum windows change by the closed form; min/max windows use the
    extremum shortcut unless an edited point held the extremum, in which
    case the window is rescanned from ``values`` with the edit applied.
    """
    x = _values(values)
    d = np.ascontiguousarray(deltas, dtype=np.float64)
    stop = start + d.shape[0] - 1
    if start < 0 or stop >= x.shape[0]:
        raise IndexError("edited span outside the series")
    newv = x[start : stop + 1] + d
    nw = (stop - start) // wagg.window + 2
    dA = np.empty(nw)
    newA = np.empty(nw)
    a = np.ascontiguousarray(wagg.a)
    w0, w1 = K.window_deltas(start, stop, newv, x, a, wagg.window, wagg.agg.code, a.shape[0], dA, newA)
    S = agg.matrix()
    K.accumulate(S, a, w0, w1, dA, agg.n)
    a2 = a.copy()
    if w1 >= w0:
        a2[w0 : w1 + 1] = newA[: w1 - w0 + 1]
    return WindowAggregates(a2, wagg.window, wagg.agg), AcfAggregates.from_matrix(S, agg.n)
