"""Greedy ACF-preserving point removal.

The :class:`Engine` owns the mutable state of one compression run: the
current linear-interpolation reconstruction, the surviving-neighbour chain,
the lag aggregates of the (optionally window-aggregated) reconstruction and
a min-heap of per-point removal impacts.  :func:`compress` drives it.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels as K
from .acf import AcfAggregates, statistic, window_aggregate
from .core import (
    AcfGuardError,
    AggKind,
    CompressedSeries,
    CompressionReport,
    ConfigError,
    DegenerateACFError,
    QualityMeasure,
    SingularRecursionError,
    StatKind,
    TimeSeries,
    measure,
    measure_context,
)


class AggregateDriftError(AcfGuardError):
    """Incrementally maintained aggregates wandered away from a fresh recomputation."""


DRIFT_RTOL = 1e-9

ERROR_BOUND = "error_bound"
TARGET_CR = "target_cr"


@dataclass
class CompressorConfig:
    lags: int
    epsilon: float = 0.01
    stat: StatKind = StatKind.ACF
    metric: QualityMeasure = QualityMeasure.MAE
    window: int = 1
    agg: AggKind = AggKind.NONE
    hops: Union[int, str, None] = None
    mode: str = ERROR_BOUND
    target_cr: Optional[float] = None
    # shadow recomputation of the aggregates every this many removals
    verify_every: Optional[int] = None

    def __post_init__(self):
        self.stat = StatKind(self.stat)
        self.metric = QualityMeasure(self.metric)
        self.agg = AggKind(self.agg)
        if self.mode not in (ERROR_BOUND, TARGET_CR):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.lags < 1:
            raise ConfigError("lags must be positive")
        if self.window < 1:
            raise ConfigError("window must be positive")
        if self.agg is AggKind.NONE and self.window != 1:
            raise ConfigError("a window > 1 needs an aggregation function")
        if self.mode == ERROR_BOUND:
            if self.target_cr is not None:
                raise ConfigError("target_cr given but mode is error_bound")
            if not self.epsilon >= 0.0:
                raise ConfigError("epsilon must be >= 0")
        else:
            if self.target_cr is None or not self.target_cr > 1.0:
                raise ConfigError("target_cr mode needs target_cr > 1")

    def echo(self) -> dict:
        d = asdict(self)
        for k in ("stat", "metric", "agg"):
            d[k] = d[k].value
        return d


def resolve_hops(hops, n: int, window: int = 1) -> int:
    """Number of surviving neighbours re-ranked on each side after a removal.

    ``None`` means ``10 * ceil(log2 n)`` times the window; tags ``logn`` and
    ``<k>xlogn`` are scaled by the window the same way; ``full`` covers the
    whole series; integers are taken literally.
    """
    logn = max(1, math.ceil(math.log2(n)))
    if hops is None:
        return 10 * logn * window
    if isinstance(hops, (int, np.integer)):
        if hops < 0:
            raise ConfigError("hops must be >= 0")
        return int(hops)
    tag = str(hops).strip().lower()
    if tag == "full":
        return n
    if tag == "logn":
        return logn * window
    if tag.endswith("xlogn"):
        try:
            k = int(tag[: -len("xlogn")])
        except ValueError:
            raise ConfigError(f"bad hops tag {hops!r}") from None
        return k * logn * window
    try:
        return resolve_hops(int(tag), n, window)
    except ValueError:
        raise ConfigError(f"bad hops value {hops!r}") from None


@dataclass
class PointRegistry:
    """Per-point removal state (views into the engine arrays)."""

    alive: np.ndarray
    left: np.ndarray
    right: np.ndarray
    impact: np.ndarray
    heap_slot: np.ndarray
    heap: np.ndarray = field(repr=False)

    def heap_members(self) -> np.ndarray:
        return np.flatnonzero(self.heap_slot >= 0)


def _window_values(y: np.ndarray, window: int, agg: AggKind) -> np.ndarray:
    if window == 1:
        return y.copy()
    return window_aggregate(y, window, agg).a


class Engine:
    """State of one greedy compression run.

    Values are shifted by the series mean before any sum is formed; the
    shift leaves every correlation unchanged and keeps the running sums
    well conditioned.
    """

    def __init__(
        self,
        series,
        lags: int,
        stat=StatKind.ACF,
        metric=QualityMeasure.MAE,
        window: int = 1,
        agg=AggKind.NONE,
        kept: Optional[np.ndarray] = None,
        center: bool = True,
    ):
        ts = TimeSeries.of(series)
        raw = ts.values
        n = raw.shape[0]
        self.raw = raw
        self.n = n
        self.stat = StatKind(stat)
        self.metric = QualityMeasure(metric)
        self.agg = AggKind(agg)
        self.window = int(window)
        if self.agg is AggKind.NONE and self.window != 1:
            raise ConfigError("a window > 1 needs an aggregation function")
        N = n // self.window
        if N < 2 * 1 or (self.window > 1 and n < 2 * self.window):
            raise ConfigError("series too short for window/lag configuration")
        if lags < 1 or lags >= N:
            raise ConfigError(f"lags must satisfy 1 <= L < {N} (effective length)")
        self.center = float(np.mean(raw)) if center else 0.0
        x = raw - self.center

        A0 = _window_values(x, self.window, self.agg)
        S0 = np.empty((5, lags))
        K.lag_sums(A0, lags, S0)
        ref = np.empty(lags)
        bad = K.stat_from_sums(S0, N, self.stat.code, ref)
        if bad:
            raise DegenerateACFError(bad, "original series")
        smooth, scale = measure_context(self.metric, ref)

        alive = np.ones(n, dtype=np.bool_)
        if kept is not None:
            alive[:] = False
            alive[np.asarray(kept, dtype=np.int64)] = True
            if not (alive[0] and alive[-1]):
                raise ConfigError("kept set must contain both endpoints")
        left = np.empty(n, dtype=np.int64)
        right = np.empty(n, dtype=np.int64)
        K.relink(alive, left, right)
        if kept is None:
            y = x.copy()
            A, S = A0.copy(), S0.copy()
        else:
            idx = np.flatnonzero(alive)
            y = np.empty(n)
            K.reconstruct(idx, x[idx].copy(), n, y)
            A = _window_values(y, self.window, self.agg)
            S = np.empty((5, lags))
            K.lag_sums(A, lags, S)

        self.st = K.State(
            x=x,
            y=y,
            A=np.ascontiguousarray(A),
            alive=alive,
            left=left,
            right=right,
            S=S,
            key=np.full(n, np.inf),
            heap=np.zeros(n, dtype=np.int64),
            pos=np.full(n, -1, dtype=np.int64),
            counts=np.array([0, int(alive.sum()), 0], dtype=np.int64),
            log=np.zeros(n, dtype=np.int64),
            ref=ref,
            smooth=smooth,
            cur=np.zeros(2),
        )
        self.cf = K.Config(self.window, self.agg.code, N, lags, self.stat.code, self.metric.code, scale)
        self.tr = _NO_TRACK
        self.st.cur[0] = self._deviation_from(S)

    # -- inspection ---------------------------------------------------------

    @property
    def lags(self) -> int:
        return self.cf.L

    @property
    def reference(self) -> np.ndarray:
        return self.st.ref

    @property
    def n_alive(self) -> int:
        return int(self.st.counts[1])

    @property
    def removal_log(self) -> np.ndarray:
        return self.st.log[: self.st.counts[2]].copy()

    @property
    def registry(self) -> PointRegistry:
        st = self.st
        return PointRegistry(st.alive, st.left, st.right, st.key, st.pos, st.heap)

    @property
    def aggregates(self) -> AcfAggregates:
        return AcfAggregates.from_matrix(self.st.S, self.cf.N)

    def reconstruction(self) -> np.ndarray:
        """Current reconstruction on the original scale."""
        return self.st.y + self.center

    def kept_indices(self) -> np.ndarray:
        return np.flatnonzero(self.st.alive)

    def current_stat(self) -> np.ndarray:
        out = np.empty(self.cf.L)
        bad = K.stat_from_sums(self.st.S, self.cf.N, self.cf.stat, out)
        if bad:
            raise DegenerateACFError(bad)
        return out

    def _deviation_from(self, S) -> float:
        out = np.empty(self.cf.L)
        if K.stat_from_sums(S, self.cf.N, self.cf.stat, out):
            return math.inf
        return float(K.distance(self.cf.metric, self.st.ref, out, self.st.smooth, self.cf.scale))

    def deviation(self) -> float:
        """Deviation of the current statistic from the original one."""
        return self._deviation_from(self.st.S)

    def compressed(self, cfg: Optional[CompressorConfig] = None, epsilon: float = 0.0) -> CompressedSeries:
        idx = self.kept_indices()
        return CompressedSeries(
            indices=idx,
            values=self.raw[idx].copy(),
            n=self.n,
            stat=self.stat,
            lags=self.cf.L,
            window=self.window,
            agg=self.agg,
            epsilon=cfg.epsilon if cfg is not None else epsilon,
            metric=self.metric,
        )

    def drift(self) -> float:
        """Largest relative gap between maintained and recomputed aggregates."""
        A = _window_values(self.st.y, self.window, self.agg)
        S = np.empty_like(self.st.S)
        K.lag_sums(A, self.cf.L, S)
        scale = np.maximum(np.abs(S), 1.0)
        return float(np.max(np.abs(self.st.S - S) / scale))

    # -- edits --------------------------------------------------------------

    def _check_interior(self, j: int) -> int:
        j = int(j)
        if not 0 < j < self.n - 1:
            raise IndexError("endpoints cannot be removed or restored")
        return j

    def evaluate(self, j: int) -> float:
        """Deviation if point j were removed now (+inf when degenerate)."""
        j = self._check_interior(j)
        if not self.st.alive[j]:
            raise ValueError(f"point {j} is already removed")
        wk = K.make_work(int(self.st.right[j] - self.st.left[j] - 1), self.cf.K, self.cf.L)
        d, _ = K.removal_impact(self.st, self.cf, j, wk)
        return float(d)

    def remove(self, j: int) -> None:
        j = self._check_interior(j)
        if not self.st.alive[j]:
            raise ValueError(f"point {j} is already removed")
        K.commit_removal(self.st, self.cf, self.tr, j)
        self.st.log[self.st.counts[2]] = j
        self.st.counts[2] += 1
        slot = self.st.pos[j]
        if slot >= 0:
            # drop from the heap by forcing it to the top
            K.heap_update(self.st, j, -np.inf)
            K.heap_pop(self.st)
        self.st.key[j] = np.inf

    def restore(self, j: int) -> None:
        j = self._check_interior(j)
        if self.st.alive[j]:
            raise ValueError(f"point {j} is not removed")
        K.commit_restore(self.st, self.cf, self.tr, j)

    # -- impacts and heap ---------------------------------------------------

    def candidates(self, protected=()) -> np.ndarray:
        alive = self.st.alive.copy()
        alive[0] = alive[-1] = False
        for p in protected:
            alive[p] = False
        return np.flatnonzero(alive)

    def impacts(self, idx: np.ndarray) -> np.ndarray:
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        out = np.empty(idx.shape[0])
        K.impacts_for(self.st, self.cf, idx, out)
        return out

    def init_impacts(self, protected=()) -> None:
        """Score every removable point and heapify (Floyd)."""
        idx = self.candidates(protected)
        self.st.key[:] = np.inf
        self.st.key[idx] = self.impacts(idx)
        K.heap_build(self.st, idx)

    def build_heap(self, members: np.ndarray) -> None:
        K.heap_build(self.st, np.ascontiguousarray(members, dtype=np.int64))

    def neighbors(self, j: int, h: int) -> np.ndarray:
        """Heap members within h surviving hops of removed point j."""
        if h <= 0:
            return np.zeros(0, dtype=np.int64)
        return K.hop_neighbors(self.st, self.st.left[j], self.st.right[j], h)

    def reheap(self, j: int, h: int) -> None:
        K.reheap_serial(self.st, self.cf, int(j), int(h))

    def update_keys(self, idx: np.ndarray, vals: np.ndarray) -> None:
        K.heap_update_many(self.st, idx, vals)

    def heap_ok(self) -> bool:
        return bool(K.heap_valid(self.st))

    # -- loop ---------------------------------------------------------------

    def run(self, h: int, mode: int, eps: float, target_alive: int = 0, max_steps: Optional[int] = None):
        """Greedy loop in compiled code; returns (status, steps)."""
        steps_cap = np.iinfo(np.int64).max if max_steps is None else int(max_steps)
        status, steps = K.greedy_run(self.st, self.cf, self.tr, int(h), mode, float(eps), int(target_alive), steps_cap)
        return int(status), int(steps)

    def step(self, mode: int, eps: float, target_alive: int = 0):
        """Pop-evaluate-commit without re-ranking; returns (status, j)."""
        status, j = K.pop_and_commit(self.st, self.cf, self.tr, mode, float(eps), int(target_alive))
        return int(status), int(j)

    def clone(self) -> "Engine":
        other = object.__new__(Engine)
        other.__dict__.update(self.__dict__)
        other.st = K.State(*(np.copy(a) for a in self.st))
        return other


_NO_TRACK = K.Track(False, 0, 0, np.zeros((5, 1)), np.zeros(1), np.zeros(1))


def get_all_impact(agg: AcfAggregates, series, reference, metric=QualityMeasure.MAE, stat=StatKind.ACF) -> PointRegistry:
    """Impact of removing each interior point of an intact series, heapified.

    ``agg`` must be the aggregates of ``series`` itself; ``reference`` is the
    statistic the impacts are measured against.
    """
    ts = TimeSeries.of(series)
    eng = Engine(ts, agg.lags, stat=stat, metric=metric, center=False)
    eng.st.S[:, :] = agg.matrix()
    ref = np.asarray(reference, dtype=np.float64)
    eng.st.ref[:] = ref
    smooth, scale = measure_context(metric, ref)
    eng.st.smooth[:] = smooth
    eng.cf = eng.cf._replace(scale=scale)
    eng.init_impacts()
    return eng.registry


def decompress(cs: CompressedSeries) -> TimeSeries:
    """Linear interpolation between the kept points."""
    out = np.empty(cs.n)
    K.reconstruct(cs.indices, cs.values, cs.n, out)
    return TimeSeries(out)


def scratch_deviation(original, reconstruction, lags: int, stat=StatKind.ACF, metric=QualityMeasure.MAE,
                      window: int = 1, agg=AggKind.NONE) -> float:
    """Deviation of the statistic, recomputed from scratch on both series."""
    a, b = _stat_pair(original, reconstruction, lags, stat, window, agg)
    return measure(metric, a, b)


def _stat_pair(original, reconstruction, lags, stat, window, agg):
    x = TimeSeries.of(original).values
    y = TimeSeries.of(reconstruction).values
    if window > 1:
        x = window_aggregate(x, window, agg).a
        y = window_aggregate(y, window, agg).a
    return statistic(x, lags, stat), statistic(y, lags, stat)


def verify_reconstruction(original, reconstruction, lags: int, stat=StatKind.ACF, metric=QualityMeasure.MAE,
                          window: int = 1, agg=AggKind.NONE) -> tuple[dict, float]:
    """Scratch deviation under every measure plus the selected one.

    A reconstruction whose statistic is undefined (zero variance at some
    lag) gets ``inf`` for the selected measure and ``None`` elsewhere.
    """
    metric = QualityMeasure(metric)
    x = TimeSeries.of(original).values
    xw, yw = x, np.asarray(reconstruction, dtype=np.float64)
    if window > 1:
        xw = window_aggregate(xw, window, agg).a
        yw = window_aggregate(yw, window, agg).a
    ref = statistic(xw, lags, stat)
    try:
        rec = statistic(yw, lags, stat)
    except (DegenerateACFError, SingularRecursionError):
        return {q.value: None for q in QualityMeasure}, math.inf
    devs = {}
    for q in QualityMeasure:
        try:
            devs[q.value] = measure(q, ref, rec)
        except ValueError:
            devs[q.value] = None
    dev = devs[metric.value]
    return devs, (math.inf if dev is None else dev)


def reconstruction_report(method: str, original, reconstruction, *, n_kept: int, bits: float, lags: int,
                          stat=StatKind.ACF, metric=QualityMeasure.MAE, window: int = 1, agg=AggKind.NONE,
                          config: Optional[dict] = None, runtime_ms: Optional[float] = None,
                          epsilon: Optional[float] = None, status: str = "ok", message: str = "",
                          extra: Optional[dict] = None) -> CompressionReport:
    """Report for any lossy output given its reconstruction and total bit cost."""
    x = TimeSeries.of(original).values
    y = np.asarray(reconstruction, dtype=np.float64)
    devs, dev = verify_reconstruction(x, y, lags, stat, metric, window, agg)
    lossless = bool(np.array_equal(x, y))
    if epsilon is None:
        passed = status == "ok"
    else:
        passed = status == "ok" and (dev < epsilon or lossless)
    try:
        nrmse = measure(QualityMeasure.NRMSE, x, y)
    except ValueError:
        nrmse = None
    n = x.shape[0]
    bpv = bits / n
    return CompressionReport(
        method=method,
        config=config or {},
        n=n,
        n_kept=int(n_kept),
        cr=64.0 / bpv,
        bits_per_value=bpv,
        acf_deviation=devs,
        nrmse=nrmse,
        msmape=measure(QualityMeasure.MSMAPE, x, y),
        runtime_ms=runtime_ms,
        verification={"scratch_acf_dev": dev, "epsilon": epsilon, "passed": passed},
        status=status,
        message=message,
        extra=extra or {},
    )


def build_report(method: str, original, cs: CompressedSeries, config: dict, runtime_ms: Optional[float],
                 epsilon: Optional[float], status: str = "ok", message: str = "",
                 extra: Optional[dict] = None, reconstruction=None) -> CompressionReport:
    """Scratch-verify a kept-point series and collect every reported measure."""
    y = decompress(cs).values if reconstruction is None else reconstruction
    rep = reconstruction_report(
        method, original, y, n_kept=cs.n_kept, bits=64.0 * cs.n_kept, lags=cs.lags, stat=cs.stat,
        metric=cs.metric, window=cs.window, agg=cs.agg, config=config, runtime_ms=runtime_ms,
        epsilon=epsilon, status=status, message=message, extra=extra,
    )
    # keep the exact n / n' ratio rather than going through bits
    rep.cr = cs.compression_ratio
    return rep


def target_alive_count(n: int, target_cr: float) -> int:
    """Largest kept count k with n / k >= target_cr."""
    k = int(n // target_cr)
    while k > 0 and n / k < target_cr:
        k -= 1
    while n / (k + 1) >= target_cr:
        k += 1
    return k


def _raise_status(eng: Engine, status: int) -> None:
    if status == K.ST_DEGENERATE:
        raise DegenerateACFError(int(eng.st.cur[1]), "reconstruction during compression")


def run_engine(eng: Engine, cfg: CompressorConfig, h: int) -> int:
    """Drive an engine whose heap is built until its stopping rule fires."""
    if cfg.mode == ERROR_BOUND:
        mode, eps, target = K.MODE_BOUND, cfg.epsilon, 0
    else:
        mode, eps, target = K.MODE_TARGET, math.inf, target_alive_count(eng.n, cfg.target_cr)
    chunk = cfg.verify_every
    while True:
        status, _ = eng.run(h, mode, eps, target, chunk)
        _raise_status(eng, status)
        if chunk is not None:
            gap = eng.drift()
            if gap > DRIFT_RTOL:
                raise AggregateDriftError(f"aggregate drift {gap:.3e} after {eng.st.counts[2]} removals")
        if status != K.ST_STEPS:
            return status


def backtrack_to_bound(eng: Engine, cfg: CompressorConfig) -> int:
    """Undo trailing removals while the scratch check disagrees with the bound.

    The incremental test and the scratch check differ only by rounding, so
    this loop almost never runs; it makes the returned guarantee hard.
    """
    undone = 0
    while eng.st.counts[2] > 0:
        dev = scratch_deviation(eng.raw, eng.reconstruction(), eng.cf.L, eng.stat, eng.metric, eng.window, eng.agg)
        if dev < cfg.epsilon:
            break
        eng.st.counts[2] -= 1
        eng.restore(int(eng.st.log[eng.st.counts[2]]))
        undone += 1
    return undone


def finish(eng: Engine, cfg: CompressorConfig, method: str, status: int, t0: float,
           extra: Optional[dict] = None) -> tuple[CompressedSeries, CompressionReport]:
    extra = dict(extra or {})
    if cfg.mode == ERROR_BOUND:
        undone = backtrack_to_bound(eng, cfg)
        if undone:
            extra["backtracked"] = undone
    runtime = (time.perf_counter() - t0) * 1e3
    cs = eng.compressed(cfg)
    rep_status, message = "ok", ""
    if cfg.mode == TARGET_CR:
        if cs.compression_ratio < cfg.target_cr:
            rep_status, message = "target_unreachable", "cannot reach target"
        extra["target_cr"] = cfg.target_cr
    extra["removals"] = int(eng.st.counts[2])
    extra["stop"] = _STOP_NAMES.get(status, str(status))
    eps = cfg.epsilon if cfg.mode == ERROR_BOUND else None
    report = build_report(method, eng.raw, cs, cfg.echo(), runtime, eps, rep_status, message, extra)
    if cfg.mode == TARGET_CR:
        report.verification["passed"] = rep_status == "ok"
    return cs, report


_STOP_NAMES = {
    K.ST_BOUND: "error_bound",
    K.ST_TARGET: "target_reached",
    K.ST_EXHAUSTED: "exhausted",
    K.ST_STEPS: "steps",
}


def make_engine(series, cfg: CompressorConfig) -> Engine:
    return Engine(series, cfg.lags, cfg.stat, cfg.metric, cfg.window, cfg.agg)


def compress(series, cfg: CompressorConfig) -> tuple[CompressedSeries, CompressionReport]:
    """Remove points greedily by ACF impact until the stopping rule fires.

    Error-bound mode stops before the first removal whose deviation would
    reach ``cfg.epsilon``; target mode stops once ``n / kept >= target_cr``.
    The result is re-verified from scratch before it is returned.
    """
    t0 = time.perf_counter()
    ts = TimeSeries.of(series)
    eng = make_engine(ts, cfg)
    h = resolve_hops(cfg.hops, eng.n, cfg.window)
    eng.init_impacts()
    status = run_engine(eng, cfg, h)
    return finish(eng, cfg, "cameo", status, t0, {"hops": h})
