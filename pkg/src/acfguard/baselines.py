"""Reference compressors for comparison with the greedy ACF compressor.

VW, TP and PIP are line-simplification methods made constraint aware: they
use the same engine (incremental aggregates, interpolation edits) and the
same scratch-verified bound.  PMC, SWING and DFT have no ACF knob; they are
swept over their native error parameter instead.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .cameo import (
    ERROR_BOUND,
    CompressorConfig,
    Engine,
    finish,
    make_engine,
    reconstruction_report,
    scratch_deviation,
    target_alive_count,
)
from .core import AggKind, CompressionReport, ConfigError, QualityMeasure, StatKind, TimeSeries

SIMPLIFIERS = ("vw", "tps", "tpm", "pipv", "pipe")
SEGMENTERS = ("pmc", "swing", "dft")
METHODS = SIMPLIFIERS + SEGMENTERS


@dataclass
class BaselineConfig:
    method: str
    lags: int
    epsilon: float = 0.01
    sweep: Sequence[float] = ()
    stat: StatKind = StatKind.ACF
    metric: QualityMeasure = QualityMeasure.MAE
    window: int = 1
    agg: AggKind = AggKind.NONE

    def __post_init__(self):
        self.method = self.method.lower()
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.method in SEGMENTERS and len(self.sweep) == 0:
            raise ConfigError(f"{self.method} needs at least one sweep value")

    def compressor(self) -> CompressorConfig:
        return CompressorConfig(self.lags, self.epsilon, self.stat, self.metric, self.window, self.agg)


def _index_bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


# ------------------------------------------------------------- line simplifiers

def triangle_area(xa, ya, xb, yb, xc, yc) -> float:
    return abs((xb - xa) * (yc - ya) - (xc - xa) * (yb - ya)) / 2.0


class _LazyHeap:
    """Min-heap with stale-entry skipping; ties go to the smaller index."""

    def __init__(self):
        self._h = []
        self._key = {}

    def set(self, i: int, k: float) -> None:
        self._key[i] = k
        heapq.heappush(self._h, (k, i))

    def pop(self):
        while self._h:
            k, i = heapq.heappop(self._h)
            if self._key.get(i) == k:
                del self._key[i]
                return i, k
        return None

    def push_back(self, i: int, k: float) -> None:
        self.set(i, k)


def _stop_rule(eng: Engine, cfg: CompressorConfig):
    target = 0 if cfg.mode == ERROR_BOUND else target_alive_count(eng.n, cfg.target_cr)
    eps = cfg.epsilon if cfg.mode == ERROR_BOUND else math.inf
    return eps, target


def _greedy_by_score(eng: Engine, cfg: CompressorConfig, heap: _LazyHeap, rescore) -> int:
    """Remove points in score order until the ACF bound or the target stops it."""
    eps, target = _stop_rule(eng, cfg)
    while True:
        if cfg.mode != ERROR_BOUND and eng.n_alive <= target:
            return K.ST_TARGET
        item = heap.pop()
        if item is None:
            return K.ST_EXHAUSTED
        j, k = item
        if eng.evaluate(j) >= eps:
            heap.push_back(j, k)
            return K.ST_BOUND
        a, b = int(eng.st.left[j]), int(eng.st.right[j])
        eng.remove(j)
        for p in (a, b):
            if 0 < p < eng.n - 1:
                heap.set(p, rescore(p))


def compress_vw(series, cfg: CompressorConfig):
    """Visvalingam-Whyatt: drop the point spanning the smallest triangle."""
    t0 = time.perf_counter()
    eng = make_engine(series, cfg)
    x = eng.raw
    left, right = eng.st.left, eng.st.right

    def area(p):
        a, b = left[p], right[p]
        return triangle_area(a, x[a], p, x[p], b, x[b])

    heap = _LazyHeap()
    for p in range(1, eng.n - 1):
        heap.set(p, area(p))
    status = _greedy_by_score(eng, cfg, heap, area)
    return finish(eng, cfg, "vw", status, t0)


def turning_points(x: np.ndarray) -> np.ndarray:
    """Interior indices where the series switches direction."""
    d = np.diff(x)
    return np.flatnonzero(d[:-1] * d[1:] < 0) + 1


def _span_errors(x, a, b):
    k = np.arange(a + 1, b)
    line = x[a] + (x[b] - x[a]) * ((k - a) / (b - a))
    return np.abs(x[a + 1 : b] - line)


def compress_tp(series, cfg: CompressorConfig, scoring: str = "sum_abs"):
    """Turning-point simplification in two phases.

    Phase 1 keeps only turning points and the endpoints.  If that already
    breaks the bound, a failed report is returned.  Phase 2 removes turning
    points by the interpolation error they would leave across the bridged
    span: its sum (``sum_abs``) or its mean (``mae``).
    """
    if scoring not in ("sum_abs", "mae"):
        raise ConfigError("scoring must be 'sum_abs' or 'mae'")
    method = "tps" if scoring == "sum_abs" else "tpm"
    t0 = time.perf_counter()
    ts = TimeSeries.of(series)
    x = ts.values
    n = x.shape[0]
    kept = np.concatenate(([0], turning_points(x), [n - 1]))
    eng = Engine(ts, cfg.lags, cfg.stat, cfg.metric, cfg.window, cfg.agg, kept=kept)
    phase1 = n - kept.shape[0]
    if cfg.mode == ERROR_BOUND and phase1 > 0:
        dev = scratch_deviation(x, eng.reconstruction(), cfg.lags, cfg.stat, cfg.metric, cfg.window, cfg.agg)
        if not dev < cfg.epsilon:
            cs = eng.compressed(cfg)
            runtime = (time.perf_counter() - t0) * 1e3
            rep = reconstruction_report(
                method, x, eng.reconstruction(), n_kept=cs.n_kept, bits=64.0 * cs.n_kept, lags=cfg.lags,
                stat=cfg.stat, metric=cfg.metric, window=cfg.window, agg=cfg.agg, config=cfg.echo(),
                runtime_ms=runtime, epsilon=cfg.epsilon, status="constraint_unsatisfiable",
                message="constraint unsatisfiable by TP", extra={"phase1_removed": phase1},
            )
            rep.cr = cs.compression_ratio
            return cs, rep
    left, right = eng.st.left, eng.st.right

    def score(p):
        e = _span_errors(x, left[p], right[p])
        return float(e.sum()) if scoring == "sum_abs" else float(e.mean())

    heap = _LazyHeap()
    for p in kept[1:-1]:
        heap.set(int(p), score(int(p)))
    status = _greedy_by_score(eng, cfg, heap, score)
    return finish(eng, cfg, method, status, t0, {"phase1_removed": phase1})


def pip_distance(x: np.ndarray, a: int, b: int, kind: str = "vertical") -> np.ndarray:
    """Distance of every point strictly between a and b to the chord a-b."""
    k = np.arange(a + 1, b, dtype=np.float64)
    v = x[a + 1 : b]
    if kind == "vertical":
        return _span_errors(x, a, b)
    # Euclidean: summed distance to the two adjacent important points
    return np.hypot(k - a, v - x[a]) + np.hypot(b - k, x[b] - v)


def pip_insertions(x: np.ndarray, distance: str = "vertical"):
    """Yield points in PIP order: farthest from its chord first, then smallest index."""
    n = x.shape[0]
    heap = []

    def push_segment(a, b):
        if b - a < 2:
            return
        d = pip_distance(x, a, b, distance)
        i = int(np.argmax(d))
        heapq.heappush(heap, (-float(d[i]), a + 1 + i, a, b))

    push_segment(0, n - 1)
    while heap:
        _, j, a, b = heapq.heappop(heap)
        yield j
        push_segment(a, j)
        push_segment(j, b)


def compress_pip(series, cfg: CompressorConfig, distance: str = "vertical"):
    """Perceptually important points, added top-down until the bound holds."""
    if distance not in ("vertical", "euclidean"):
        raise ConfigError("distance must be 'vertical' or 'euclidean'")
    if cfg.mode != ERROR_BOUND:
        raise ConfigError("PIP supports the error-bound mode only")
    method = "pipv" if distance == "vertical" else "pipe"
    t0 = time.perf_counter()
    ts = TimeSeries.of(series)
    x = ts.values
    n = x.shape[0]
    eng = Engine(ts, cfg.lags, cfg.stat, cfg.metric, cfg.window, cfg.agg, kept=[0, n - 1])

    def satisfied():
        if not eng.deviation() < cfg.epsilon:
            return False
        dev = scratch_deviation(x, eng.reconstruction(), cfg.lags, cfg.stat, cfg.metric, cfg.window, cfg.agg)
        return dev < cfg.epsilon

    added = 0
    if not satisfied():
        for j in pip_insertions(x, distance):
            eng.restore(j)
            added += 1
            if satisfied():
                break
    runtime = (time.perf_counter() - t0) * 1e3
    cs = eng.compressed(cfg)
    rep = reconstruction_report(
        method, x, eng.reconstruction(), n_kept=cs.n_kept, bits=64.0 * cs.n_kept, lags=cfg.lags,
        stat=cfg.stat, metric=cfg.metric, window=cfg.window, agg=cfg.agg, config=cfg.echo(),
        runtime_ms=runtime, epsilon=cfg.epsilon, extra={"added": added},
    )
    rep.cr = cs.compression_ratio
    return cs, rep


# ------------------------------------------------------------- segment models

@dataclass(frozen=True)
class Segments:
    """Piecewise model: segment s covers [starts[s], starts[s+1]).

    ``kind`` is ``constant`` (one value per segment) or ``linear``
    (value at the segment start and a slope per step).
    """

    kind: str
    n: int
    starts: np.ndarray
    values: np.ndarray
    slopes: Optional[np.ndarray] = None

    @property
    def n_segments(self) -> int:
        return int(self.starts.shape[0])

    def bits(self) -> int:
        per = 64 if self.kind == "constant" else 128
        return self.n_segments * (per + _index_bits(self.n))

    def reconstruct(self) -> np.ndarray:
        out = np.empty(self.n)
        ends = np.append(self.starts[1:], self.n)
        for s in range(self.n_segments):
            a, b = int(self.starts[s]), int(ends[s])
            if self.kind == "constant":
                out[a:b] = self.values[s]
            else:
                out[a:b] = _line(self.values[s], self.slopes[s], b - a)
        return out


def _line(v0, slope, m):
    return v0 + slope * np.arange(m, dtype=np.float64)


def _check_dev(max_dev: float) -> float:
    max_dev = float(max_dev)
    if not max_dev >= 0.0:
        raise ConfigError("max_dev must be >= 0")
    return max_dev


def pmc_segments(series, max_dev: float) -> Segments:
    """Poor man's compression: constant segments emitting the midrange."""
    x = TimeSeries.of(series).values
    max_dev = _check_dev(max_dev)
    n = x.shape[0]
    starts, values = [], []
    a = 0
    while a < n:
        lo = hi = x[a]
        b = a + 1
        while b < n:
            lo2, hi2 = min(lo, x[b]), max(hi, x[b])
            if hi2 - lo2 > 2.0 * max_dev:
                break
            mid = (lo2 + hi2) / 2.0
            # guard against the midpoint rounding past the bound
            if hi2 - mid > max_dev or mid - lo2 > max_dev:
                break
            lo, hi = lo2, hi2
            b += 1
        starts.append(a)
        values.append((lo + hi) / 2.0)
        a = b
    return Segments("constant", n, np.array(starts, dtype=np.int64), np.array(values))


def _swing_extent(x, a, max_dev, stop):
    """Longest run from a whose slope bounds stay consistent; returns (b, slope)."""
    v0 = x[a]
    up, low = math.inf, -math.inf
    slope = 0.0
    b = a + 1
    while b < stop:
        k = b - a
        up2 = min(up, (x[b] + max_dev - v0) / k)
        low2 = max(low, (x[b] - max_dev - v0) / k)
        if low2 > up2:
            break
        up, low = up2, low2
        slope = (up + low) / 2.0
        b += 1
    return b, slope


def swing_segments(series, max_dev: float) -> Segments:
    """Swing filter: disconnected lines anchored at each segment's first value."""
    x = TimeSeries.of(series).values
    max_dev = _check_dev(max_dev)
    n = x.shape[0]
    starts, values, slopes = [], [], []
    a = 0
    while a < n:
        b, slope = _swing_extent(x, a, max_dev, n)
        # the bounds hold exactly; rounding in v0 + s*k may not
        while np.max(np.abs(_line(x[a], slope, b - a) - x[a:b])) > max_dev:
            b, slope = _swing_extent(x, a, max_dev, b - 1)
        starts.append(a)
        values.append(x[a])
        slopes.append(slope)
        a = b
    return Segments("linear", n, np.array(starts, dtype=np.int64), np.array(values), np.array(slopes))


@dataclass(frozen=True)
class DftCoefficients:
    """Kept bins of the real FFT; bin 0 (the mean) is always kept."""

    n: int
    bins: np.ndarray
    coefs: np.ndarray = field(repr=False)

    def bits(self) -> int:
        return self.bins.shape[0] * (128 + _index_bits(self.n))

    def reconstruct(self) -> np.ndarray:
        spec = np.zeros(self.n // 2 + 1, dtype=np.complex128)
        spec[self.bins] = self.coefs
        return np.fft.irfft(spec, n=self.n)


def dft_truncate(series, keep_k: int) -> DftCoefficients:
    x = TimeSeries.of(series).values
    n = x.shape[0]
    keep_k = int(keep_k)
    if keep_k < 0 or keep_k > n / 2:
        raise ConfigError(f"keep_k must be in [0, n/2], got {keep_k}")
    spec = np.fft.rfft(x)
    mag = np.abs(spec[1:])
    # largest magnitude first, lower frequency on ties
    order = np.lexsort((np.arange(mag.shape[0]), -mag))[:keep_k] + 1
    bins = np.sort(np.concatenate(([0], order))).astype(np.int64)
    return DftCoefficients(n, bins, spec[bins])


def _model_report(method, x, model, n_params, param, cfg, runtime):
    return reconstruction_report(
        method, x, model.reconstruct(), n_kept=n_params, bits=float(model.bits()), lags=cfg.lags,
        stat=cfg.stat, metric=cfg.metric, window=cfg.window, agg=cfg.agg,
        config={**cfg.echo(), "param": param}, runtime_ms=runtime,
    )


def compress_pmc(series, max_dev: float, cfg: CompressorConfig):
    t0 = time.perf_counter()
    seg = pmc_segments(series, max_dev)
    x = TimeSeries.of(series).values
    return seg, _model_report("pmc", x, seg, seg.n_segments, max_dev, cfg, (time.perf_counter() - t0) * 1e3)


def compress_swing(series, max_dev: float, cfg: CompressorConfig):
    t0 = time.perf_counter()
    seg = swing_segments(series, max_dev)
    x = TimeSeries.of(series).values
    return seg, _model_report("swing", x, seg, seg.n_segments, max_dev, cfg, (time.perf_counter() - t0) * 1e3)


def compress_dft(series, keep_k: int, cfg: CompressorConfig):
    t0 = time.perf_counter()
    model = dft_truncate(series, keep_k)
    x = TimeSeries.of(series).values
    rep = _model_report("dft", x, model, model.bins.shape[0], int(keep_k), cfg, (time.perf_counter() - t0) * 1e3)
    return model, rep


_SEGMENT_RUNNERS = {"pmc": compress_pmc, "swing": compress_swing, "dft": compress_dft}


def sweep(series, cfg: BaselineConfig) -> tuple[list[dict], list[CompressionReport]]:
    """Run a native-parameter method over cfg.sweep; one frontier row per value."""
    if cfg.method not in _SEGMENT_RUNNERS:
        raise ConfigError(f"sweep applies to {SEGMENTERS}, not {cfg.method!r}")
    run = _SEGMENT_RUNNERS[cfg.method]
    ccfg = cfg.compressor()
    rows, reports = [], []
    for v in cfg.sweep:
        param = int(v) if cfg.method == "dft" else float(v)
        _, rep = run(series, param, ccfg)
        rows.append({
            "param": param,
            "cr": rep.cr,
            "acf_dev": rep.verification["scratch_acf_dev"],
            "nrmse": rep.nrmse,
        })
        reports.append(rep)
    return rows, reports


def run_simplifier(series, method: str, cfg: CompressorConfig):
    method = method.lower()
    if method == "vw":
        return compress_vw(series, cfg)
    if method in ("tps", "tpm"):
        return compress_tp(series, cfg, "sum_abs" if method == "tps" else "mae")
    if method in ("pipv", "pipe"):
        return compress_pip(series, cfg, "vertical" if method == "pipv" else "euclidean")
    raise ConfigError(f"unknown simplifier {method!r}")
