"""Threaded execution of the greedy compressor.

Fine-grained mode keeps the serial removal order and only spreads the
neighbourhood re-scoring of each step over a thread pool, so its output is
bit-identical to :func:`acfguard.cameo.compress`.

Coarse-grained mode splits the series into consecutive chunks.  Each worker
compresses its chunk on a private copy of the state until its own edits use
up ``p * eps / T`` of the budget.  The chunk results are then merged with the
overlap algebra below and a single global loop continues up to ``eps``.

For a chunk pair (i, i+1) and lag l the cross-chunk product sum is::

    sum (a_t + d_t)(a_{t+l} + e_{t+l}) = base + sum d_t a_{t+l}
                                          + sum a_t e_{t+l} + sum d_t e_{t+l}

where d and e are the edits of the two workers.  Worker i publishes the
second term, worker i+1 the third; the last needs both and is formed at the
barrier.
"""
from __future__ import annotations

import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .acf import window_aggregate
from .cameo import (
    DRIFT_RTOL,
    ERROR_BOUND,
    AggregateDriftError,
    CompressorConfig,
    Engine,
    _raise_status,
    finish,
    make_engine,
    resolve_hops,
    run_engine,
    target_alive_count,
)
from .core import AggKind, ConfigError, TimeSeries

DEFAULT_BUDGET_FRACTION = 0.9


def default_threads() -> int:
    """Thread count from ACFGUARD_THREADS, else 1."""
    raw = os.environ.get("ACFGUARD_THREADS", "").strip()
    if not raw:
        return 1
    try:
        t = int(raw)
    except ValueError:
        raise ConfigError(f"ACFGUARD_THREADS must be an integer, got {raw!r}") from None
    if t < 1:
        raise ConfigError("ACFGUARD_THREADS must be >= 1")
    return t


# ------------------------------------------------------------------ fine

def _split(idx: np.ndarray, parts: int):
    return [c for c in np.array_split(idx, parts) if c.shape[0]]


def compress_fine(series, cfg: CompressorConfig, threads: int = 2):
    """Serial greedy order with the per-step re-scoring run on ``threads`` workers."""
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    t0 = time.perf_counter()
    eng = make_engine(TimeSeries.of(series), cfg)
    h = resolve_hops(cfg.hops, eng.n, cfg.window)
    if h < threads:
        raise ConfigError(f"hops ({h}) must be at least the fine thread count ({threads})")
    if cfg.mode == ERROR_BOUND:
        mode, eps, target = K.MODE_BOUND, cfg.epsilon, 0
    else:
        mode, eps, target = K.MODE_TARGET, math.inf, target_alive_count(eng.n, cfg.target_cr)
    st, cf = eng.st, eng.cf

    with ThreadPoolExecutor(max_workers=threads) as pool:

        def score(idx):
            out = np.empty(idx.shape[0])
            parts = _split(idx, threads)
            offs = np.cumsum([0] + [c.shape[0] for c in parts])
            futs = [pool.submit(K.impacts_for, st, cf, c, out[offs[i] : offs[i + 1]]) for i, c in enumerate(parts)]
            for f in futs:
                f.result()
            return out

        cand = eng.candidates()
        st.key[:] = np.inf
        st.key[cand] = score(cand)
        K.heap_build(st, cand)
        steps = 0
        while True:
            status, j = eng.step(mode, eps, target)
            _raise_status(eng, status)
            if status != K.ST_STEPS:
                break
            if h > 0:
                idx = eng.neighbors(j, h)
                if idx.shape[0]:
                    eng.update_keys(idx, score(idx))
            steps += 1
            if cfg.verify_every and steps % cfg.verify_every == 0:
                gap = eng.drift()
                if gap > DRIFT_RTOL:
                    raise AggregateDriftError(f"aggregate drift {gap:.3e} after {steps} removals")
    return finish(eng, cfg, "cameo", status, t0, {"hops": h, "threads_fine": threads})


# ------------------------------------------------------------------ coarse

@dataclass(frozen=True)
class PartitionPlan:
    """T consecutive chunks; chunk i covers raw indices [bounds[i], bounds[i+1])."""

    T: int
    bounds: np.ndarray
    window: int
    lags: int
    p: float
    epsilon: float
    chunk_sums: np.ndarray   # (T, 5, L), sums fully inside each chunk
    overlap: np.ndarray      # (T-1, L), cross-chunk products per adjacent pair

    @property
    def local_budget(self) -> float:
        return self.p * self.epsilon / self.T

    def chunk(self, i: int) -> tuple[int, int]:
        """First and last raw index of chunk i."""
        return int(self.bounds[i]), int(self.bounds[i + 1]) - 1

    def window_span(self, i: int, N: int) -> tuple[int, int]:
        a = int(self.bounds[i]) // self.window
        b = N - 1 if i == self.T - 1 else int(self.bounds[i + 1]) // self.window - 1
        return a, b

    def merged(self) -> np.ndarray:
        """Global aggregates recombined from the chunk and overlap terms."""
        S = self.chunk_sums.sum(axis=0)
        S[4] += self.overlap.sum(axis=0)
        return S


def _chunk_terms(A: np.ndarray, L: int, spans):
    T = len(spans)
    sums = np.empty((T, 5, L))
    ov = np.empty((max(T - 1, 0), L))
    for i, (a, b) in enumerate(spans):
        K.partition_sums(A, L, a, b, sums[i])
    for i in range(T - 1):
        K.overlap_sums(A, L, spans[i][0], spans[i][1], spans[i + 1][1], ov[i])
    return sums, ov


def plan_partitions(series, T: int, L: int, p: float = DEFAULT_BUDGET_FRACTION, epsilon: float = 0.01,
                    window: int = 1, agg=AggKind.NONE, values: Optional[np.ndarray] = None) -> PartitionPlan:
    """Equal window-aligned chunks (the last absorbs the remainder).

    ``values`` overrides the sequence the sums are taken over (the engine
    passes its shifted window values).
    """
    x = TimeSeries.of(series).values
    n = x.shape[0]
    if T < 1:
        raise ConfigError("partition count must be >= 1")
    if not 0.0 < p <= 1.0:
        raise ConfigError("budget fraction must be in (0, 1]")
    A = values
    if A is None:
        A = x if window == 1 else window_aggregate(x, window, agg).a
    N = A.shape[0]
    if N < T * (2 * L + 4):
        raise ConfigError(f"series too short for T={T}, L={L} (need {T * (2 * L + 4)} values, have {N})")
    size = N // T
    bounds = np.array([i * size * window for i in range(T)] + [n], dtype=np.int64)
    spans = [(i * size, (N - 1) if i == T - 1 else (i + 1) * size - 1) for i in range(T)]
    sums, ov = _chunk_terms(np.ascontiguousarray(A, dtype=np.float64), L, spans)
    return PartitionPlan(T, bounds, window, L, float(p), float(epsilon), sums, ov)


class _OverlapLedger:
    """Per adjacent pair: edit contributions published by each side."""

    def __init__(self, T: int, L: int):
        self.from_left = np.zeros((max(T - 1, 0), L))
        self.from_right = np.zeros((max(T - 1, 0), L))
        self.locks = [threading.Lock() for _ in range(max(T - 1, 0))]

    def publish(self, i: int, tr) -> None:
        # only the workers of chunks k and k+1 ever take lock k
        if i > 0:
            with self.locks[i - 1]:
                self.from_right[i - 1] += tr.ov_left
        if i < len(self.locks):
            with self.locks[i]:
                self.from_left[i] += tr.ov_right


def _run_worker(base: Engine, plan: PartitionPlan, i: int, h: int, ledger: _OverlapLedger):
    eng = base.clone()
    L = eng.cf.L
    w0, w1 = plan.window_span(i, eng.cf.N)
    eng.tr = K.Track(True, w0, w1, np.zeros((5, L)), np.zeros(L), np.zeros(L))
    r0, r1 = plan.chunk(i)
    cand = np.arange(max(r0 + 1, 1), min(r1, eng.n - 1), dtype=np.int64)
    eng.st.key[:] = np.inf
    if cand.shape[0]:
        eng.st.key[cand] = eng.impacts(cand)
    eng.build_heap(cand)
    status, _ = eng.run(h, K.MODE_BOUND, plan.local_budget)
    _raise_status(eng, status)
    ledger.publish(i, eng.tr)
    return eng


def _interleave(logs):
    out = []
    for s in range(max((len(g) for g in logs), default=0)):
        for g in logs:
            if s < len(g):
                out.append(g[s])
    return np.array(out, dtype=np.int64)


def _merge(base: Engine, plan: PartitionPlan, workers, ledger: _OverlapLedger) -> tuple[Engine, float]:
    """Fold the worker states into one engine; returns it and the identity gap."""
    g = base.clone()
    st = g.st
    N = g.cf.N
    A0 = base.st.A
    for i, w in enumerate(workers):
        r0, r1 = plan.chunk(i)
        st.y[r0 : r1 + 1] = w.st.y[r0 : r1 + 1]
        st.alive[r0 : r1 + 1] = w.st.alive[r0 : r1 + 1]
        a, b = plan.window_span(i, N)
        st.A[a : b + 1] = w.st.A[a : b + 1]
        st.key[r0 : r1 + 1] = w.st.key[r0 : r1 + 1]
    S = np.zeros_like(st.S)
    for i, w in enumerate(workers):
        S += plan.chunk_sums[i] + w.tr.own
    d = st.A - A0
    cross = np.empty(g.cf.L)
    for k in range(plan.T - 1):
        a0, a1 = plan.window_span(k, N)
        _, b1 = plan.window_span(k + 1, N)
        K.overlap_cross(d, g.cf.L, a0, a1, b1, cross)
        S[4] += plan.overlap[k] + ledger.from_left[k] + ledger.from_right[k] + cross
    st.S[:, :] = S
    K.relink(st.alive, st.left, st.right)
    log = _interleave([w.removal_log for w in workers])
    st.log[: log.shape[0]] = log
    st.counts[1] = int(st.alive.sum())
    st.counts[2] = log.shape[0]
    fresh = np.empty_like(S)
    K.lag_sums(st.A, g.cf.L, fresh)
    gap = float(np.max(np.abs(S - fresh) / np.maximum(np.abs(fresh), 1.0)))
    return g, gap


def compress_coarse(series, cfg: CompressorConfig, threads: int = 2, p: float = DEFAULT_BUDGET_FRACTION):
    """Partitioned compression with a synchronised global phase."""
    if cfg.mode != ERROR_BOUND:
        raise ConfigError("coarse-grained mode supports the error-bound mode only")
    t0 = time.perf_counter()
    base = make_engine(TimeSeries.of(series), cfg)
    h = resolve_hops(cfg.hops, base.n, cfg.window)
    plan = plan_partitions(base.raw, threads, cfg.lags, p, cfg.epsilon, cfg.window, cfg.agg, values=base.st.A)
    ledger = _OverlapLedger(plan.T, cfg.lags)
    with ThreadPoolExecutor(max_workers=plan.T) as pool:
        futs = [pool.submit(_run_worker, base, plan, i, h, ledger) for i in range(plan.T)]
        workers = [f.result() for f in futs]
    t_local = time.perf_counter()

    eng, gap = _merge(base, plan, workers, ledger)
    if gap > DRIFT_RTOL:
        raise AggregateDriftError(f"chunk merge disagrees with the global aggregates by {gap:.3e}")
    local_removed = int(eng.st.counts[2])
    undone = 0
    while eng.st.counts[2] > 0 and not eng.deviation() < cfg.epsilon:
        eng.st.counts[2] -= 1
        eng.restore(int(eng.st.log[eng.st.counts[2]]))
        undone += 1
    if undone:
        eng.init_impacts()
    else:
        # worker keys carry over; released chunk boundaries get fresh ones
        released = [b for i in range(plan.T) for b in plan.chunk(i) if 0 < b < eng.n - 1]
        released = np.array(sorted(set(released)), dtype=np.int64)
        if released.shape[0]:
            eng.st.key[released] = eng.impacts(released)
        eng.build_heap(eng.candidates())
    status = run_engine(eng, cfg, h)
    t_global = time.perf_counter()
    extra = {
        "hops": h,
        "threads_coarse": plan.T,
        "budget_fraction": plan.p,
        "local_budget": plan.local_budget,
        "local_removals": local_removed,
        "merge_undone": undone,
        "merge_gap": gap,
        "local_ms": (t_local - t0) * 1e3,
        "global_ms": (t_global - t_local) * 1e3,
    }
    return finish(eng, cfg, "cameo", status, t0, extra)
