"""Numba kernels behind the greedy compressor.

Everything here works on 0-based indices and on plain arrays bundled into
namedtuples (numba handles namedtuples of arrays natively).  The Python
modules wrap these with validation and friendlier types.

Layout of the per-lag aggregate matrix ``S`` (shape ``(5, L)``, column
``l - 1`` holds lag ``l``) over a sequence ``a`` of length ``N``::

    S[0] = sum(a[t]          for t in [0, N-l))      # sx
    S[1] = sum(a[t]          for t in [l, N))        # sx_l
    S[2] = sum(a[t]**2       for t in [0, N-l))      # sx2
    S[3] = sum(a[t]**2       for t in [l, N))        # sx2_l
    S[4] = sum(a[t]*a[t+l]   for t in [0, N-l))      # sxx_l
"""
from collections import namedtuple
import math

import numpy as np
from numba import njit

ACF, PACF = 0, 1
MAE, RMSE, NRMSE, MSMAPE, MAPE, CHEB = 0, 1, 2, 3, 4, 5
AGG_NONE, AGG_MEAN, AGG_SUM, AGG_MIN, AGG_MAX = 0, 1, 2, 3, 4

# greedy_run status codes
ST_STEPS = 0        # max_steps exhausted
ST_BOUND = 1        # next removal would reach the error bound
ST_TARGET = 2       # target kept-count reached
ST_EXHAUSTED = 3    # nothing removable left (heap empty or only +inf keys)
ST_DEGENERATE = 4   # popped candidate produced a zero-variance lag

MODE_BOUND, MODE_TARGET = 0, 1

# relative threshold under which a variance term counts as zero
VAR_RTOL = 1e-12
# |denominator| under which a Durbin-Levinson step is singular
DL_TOL = 1e-14

State = namedtuple(
    "State",
    [
        "x",        # shifted original values, (n,)
        "y",        # shifted current reconstruction, (n,)
        "A",        # window aggregates of y, (N,)
        "alive",    # (n,) bool
        "left",     # nearest surviving predecessor, (n,) int64
        "right",    # nearest surviving successor, (n,) int64
        "S",        # (5, L) aggregates over A
        "key",      # impact per point, (n,)
        "heap",     # heap slots -> point, (n,) int64
        "pos",      # point -> heap slot or -1, (n,) int64
        "counts",   # [heap_size, alive_count, log_count]
        "log",      # removal order, (n,) int64
        "ref",      # reference statistic of the original, (L,)
        "smooth",   # mSMAPE smoothing term of ref, (L,)
        "cur",      # [current deviation, degenerate lag of last failure]
    ],
)

Config = namedtuple("Config", ["K", "agg", "N", "L", "stat", "metric", "scale"])

Track = namedtuple("Track", ["on", "c0", "c1", "own", "ov_left", "ov_right"])


# ---------------------------------------------------------------- sums / ACF

@njit(cache=True, nogil=True)
def lag_sums(a, L, out):
    N = a.shape[0]
    for l in range(1, L + 1):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        s4 = 0.0
        for t in range(N - l):
            u = a[t]
            v = a[t + l]
            s0 += u
            s1 += v
            s2 += u * u
            s3 += v * v
            s4 += u * v
        out[0, l - 1] = s0
        out[1, l - 1] = s1
        out[2, l - 1] = s2
        out[3, l - 1] = s3
        out[4, l - 1] = s4


@njit(cache=True, nogil=True)
def partition_sums(a, L, c0, c1, out):
    """Chunk-internal sums: every index in [c0, c1], pairs fully inside."""
    N = a.shape[0]
    for l in range(1, L + 1):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        s4 = 0.0
        for t in range(c0, c1 + 1):
            u = a[t]
            if t < N - l:
                s0 += u
                s2 += u * u
                if t + l <= c1:
                    s4 += u * a[t + l]
            if t >= l:
                s1 += u
                s3 += u * u
        out[0, l - 1] = s0
        out[1, l - 1] = s1
        out[2, l - 1] = s2
        out[3, l - 1] = s3
        out[4, l - 1] = s4


@njit(cache=True, nogil=True)
def overlap_sums(a, L, c0, c1, d1, out):
    """sum a[t]*a[t+l] over t in [c0, c1] with t+l in (c1, d1]."""
    for l in range(1, L + 1):
        s = 0.0
        t0 = c1 + 1 - l
        if t0 < c0:
            t0 = c0
        for t in range(t0, c1 + 1):
            if t + l <= d1:
                s += a[t] * a[t + l]
        out[l - 1] = s


@njit(cache=True, nogil=True)
def overlap_cross(d, L, c0, c1, d1, out):
    """Cross term sum d[t]*d[t+l] for the same index pairs as overlap_sums."""
    overlap_sums(d, L, c0, c1, d1, out)


@njit(cache=True, nogil=True)
def acf_from_sums(S, N, out):
    """Two-window Pearson ACF from aggregates; returns 0 or the first degenerate lag."""
    L = S.shape[1]
    for l in range(1, L + 1):
        m = N - l
        sx = S[0, l - 1]
        sxl = S[1, l - 1]
        sx2 = S[2, l - 1]
        sx2l = S[3, l - 1]
        sxx = S[4, l - 1]
        num = m * sxx - sx * sxl
        d1 = m * sx2 - sx * sx
        d2 = m * sx2l - sxl * sxl
        if not (d1 > VAR_RTOL * m * sx2) or not (d2 > VAR_RTOL * m * sx2l):
            return l
        out[l - 1] = num / (math.sqrt(d1) * math.sqrt(d2))
    return 0


@njit(cache=True, nogil=True)
def acf_two_pass(a, L, out):
    """Reference ACF: centred Pearson correlation of a[:N-l] and a[l:]."""
    N = a.shape[0]
    for l in range(1, L + 1):
        m = N - l
        mu1 = 0.0
        mu2 = 0.0
        for t in range(m):
            mu1 += a[t]
            mu2 += a[t + l]
        mu1 /= m
        mu2 /= m
        c = 0.0
        v1 = 0.0
        v2 = 0.0
        q1 = 0.0
        q2 = 0.0
        for t in range(m):
            u = a[t] - mu1
            v = a[t + l] - mu2
            c += u * v
            v1 += u * u
            v2 += v * v
            q1 += a[t] * a[t]
            q2 += a[t + l] * a[t + l]
        if not (v1 > 1e-24 * q1) or not (v2 > 1e-24 * q2):
            return l
        out[l - 1] = c / (math.sqrt(v1) * math.sqrt(v2))
    return 0


@njit(cache=True, nogil=True)
def pacf_from_rho(rho, out):
    """Durbin-Levinson recursion; returns 0 or the first singular lag."""
    L = rho.shape[0]
    phi = np.empty(L)
    tmp = np.empty(L)
    out[0] = rho[0]
    phi[0] = rho[0]
    for l in range(2, L + 1):
        num = rho[l - 1]
        den = 1.0
        for k in range(1, l):
            num -= phi[k - 1] * rho[l - 1 - k]
            den -= phi[k - 1] * rho[k - 1]
        if abs(den) < DL_TOL:
            return l
        p = num / den
        for k in range(1, l):
            tmp[k - 1] = phi[k - 1] - p * phi[l - 1 - k]
        for k in range(1, l):
            phi[k - 1] = tmp[k - 1]
        phi[l - 1] = p
        out[l - 1] = p
    return 0


@njit(cache=True, nogil=True)
def stat_from_sums(S, N, stat, out):
    bad = acf_from_sums(S, N, out)
    if bad != 0 or stat == ACF:
        return bad
    rho = out.copy()
    return pacf_from_rho(rho, out)


# ---------------------------------------------------------------- distances

@njit(cache=True, nogil=True)
def distance(kind, ref, cand, smooth, scale):
    """Quality measure between two equal-length vectors, reference first."""
    L = ref.shape[0]
    if kind == CHEB:
        m = 0.0
        for i in range(L):
            e = abs(ref[i] - cand[i])
            if e > m:
                m = e
        return m
    s = 0.0
    if kind == MAE:
        for i in range(L):
            s += abs(ref[i] - cand[i])
        return s / L
    if kind == RMSE or kind == NRMSE:
        for i in range(L):
            e = ref[i] - cand[i]
            s += e * e
        r = math.sqrt(s / L)
        if kind == NRMSE:
            return r / scale
        return r
    if kind == MAPE:
        for i in range(L):
            s += abs(ref[i] - cand[i]) / abs(ref[i])
        return s / L
    # mSMAPE
    for i in range(L):
        den = abs(ref[i] + cand[i]) / 2.0 + smooth[i]
        if den == 0.0:
            continue
        s += abs(ref[i] - cand[i]) / den
    return s / L


@njit(cache=True, nogil=True)
def _bit_add(tree, i, v):
    n = tree.shape[0]
    i += 1
    while i <= n:
        tree[i - 1] += v
        i += i & (-i)


@njit(cache=True, nogil=True)
def _bit_sum(tree, i):
    # sum over ranks [0, i)
    s = 0.0
    while i > 0:
        s += tree[i - 1]
        i -= i & (-i)
    return s


@njit(cache=True, nogil=True)
def running_mad(x):
    """S[i] = mean absolute deviation of x[:i] around its own mean; S[0] = 0.

    Fenwick trees over value ranks give O(n log n).
    """
    n = x.shape[0]
    out = np.zeros(n)
    if n < 2:
        return out
    order = np.argsort(x, kind="mergesort")
    sv = x[order]
    rank = np.empty(n, dtype=np.int64)
    for r in range(n):
        rank[order[r]] = r
    cnt = np.zeros(n)
    tot = np.zeros(n)
    total = 0.0
    for i in range(1, n):
        v = x[i - 1]
        _bit_add(cnt, rank[i - 1], 1.0)
        _bit_add(tot, rank[i - 1], v)
        total += v
        mean = total / i
        r = np.searchsorted(sv, mean, side="right")
        c_le = _bit_sum(cnt, r)
        s_le = _bit_sum(tot, r)
        dev = mean * c_le - s_le + (total - s_le) - mean * (i - c_le)
        if dev < 0.0:
            dev = 0.0
        out[i] = dev / i
    return out


# ---------------------------------------------------------------- deltas

@njit(cache=True, nogil=True)
def interp(ya, yb, a, b, k):
    return ya + (yb - ya) * ((k - a) / (b - a))


@njit(cache=True, nogil=True)
def window_deltas(lo, hi, newv, y, A, K, agg, N, dA, newA):
    """Changes of the window aggregates when y[lo..hi] becomes newv.

    Returns (w0, w1); dA/newA[w - w0] hold the change and the new value.
    An empty range (w1 < w0) means no window is touched.
    """
    w0 = lo // K
    w1 = hi // K
    if w1 > N - 1:
        w1 = N - 1
    for w in range(w0, w1 + 1):
        s = w * K
        e = s + K - 1
        klo = lo if lo > s else s
        khi = hi if hi < e else e
        aw = A[w]
        if agg == AGG_MIN or agg == AGG_MAX:
            sign = 1.0 if agg == AGG_MAX else -1.0
            hit = False
            best = -np.inf
            for k in range(klo, khi + 1):
                if sign * y[k] >= sign * aw:
                    hit = True
                v = sign * newv[k - lo]
                if v > best:
                    best = v
            if hit:
                # an edited point held the extremum: rescan the window
                best = -np.inf
                for k in range(s, e + 1):
                    if k >= lo and k <= hi:
                        v = sign * newv[k - lo]
                    else:
                        v = sign * y[k]
                    if v > best:
                        best = v
                nv = sign * best
            else:
                nv = aw if sign * aw >= best else sign * best
            newA[w - w0] = nv
            dA[w - w0] = nv - aw
        else:
            acc = 0.0
            for k in range(klo, khi + 1):
                acc += newv[k - lo] - y[k]
            if agg == AGG_MEAN and K > 1:
                acc = acc / K
            dA[w - w0] = acc
            newA[w - w0] = aw + acc
    return w0, w1


@njit(cache=True, nogil=True)
def accumulate(S, A, w0, w1, dA, N):
    """Apply window changes dA over [w0, w1] to the aggregates S in place."""
    L = S.shape[1]
    for l in range(1, L + 1):
        lim = N - l
        sx = S[0, l - 1]
        sxl = S[1, l - 1]
        sx2 = S[2, l - 1]
        sx2l = S[3, l - 1]
        sxx = S[4, l - 1]
        for w in range(w0, w1 + 1):
            d = dA[w - w0]
            if d == 0.0:
                continue
            aw = A[w]
            q = d * (2.0 * aw + d)
            if w < lim:
                sx += d
                sx2 += q
                p = w + l
                sxx += d * A[p]
                if p <= w1:
                    sxx += d * dA[p - w0]
            if w >= l:
                sxl += d
                sx2l += q
                sxx += d * A[w - l]
        S[0, l - 1] = sx
        S[1, l - 1] = sxl
        S[2, l - 1] = sx2
        S[3, l - 1] = sx2l
        S[4, l - 1] = sxx


@njit(cache=True, nogil=True)
def accumulate_partition(tr, A, w0, w1, dA, N):
    """Same edit, split into chunk-internal sums and one-sided overlap terms."""
    own = tr.own
    L = own.shape[1]
    c0 = tr.c0
    c1 = tr.c1
    for l in range(1, L + 1):
        lim = N - l
        for w in range(w0, w1 + 1):
            d = dA[w - w0]
            if d == 0.0:
                continue
            aw = A[w]
            q = d * (2.0 * aw + d)
            if w < lim:
                own[0, l - 1] += d
                own[2, l - 1] += q
                p = w + l
                if p > c1:
                    tr.ov_right[l - 1] += d * A[p]
                else:
                    own[4, l - 1] += d * A[p]
                    if p <= w1:
                        own[4, l - 1] += d * dA[p - w0]
            if w >= l:
                own[1, l - 1] += d
                own[3, l - 1] += q
                p = w - l
                if p < c0:
                    tr.ov_left[l - 1] += d * A[p]
                else:
                    own[4, l - 1] += d * A[p]


# ---------------------------------------------------------------- candidates

Work = namedtuple("Work", ["newv", "dA", "newA", "rho", "out", "phi", "tmp"])


@njit(cache=True, nogil=True)
def make_work(span, K, L):
    nw = span // K + 2
    return Work(np.empty(span), np.empty(nw), np.empty(nw), np.empty(L), np.empty(L), np.empty(L), np.empty(L))


@njit(cache=True, nogil=True)
def removal_values(j, y, left, right, newv):
    a = left[j]
    b = right[j]
    lo = a + 1
    hi = b - 1
    ya = y[a]
    yb = y[b]
    for k in range(lo, hi + 1):
        newv[k - lo] = interp(ya, yb, a, b, k)
    return lo, hi


@njit(cache=True, nogil=True)
def restore_values(j, x, y, alive, newv):
    a = j - 1
    while not alive[a]:
        a -= 1
    b = j + 1
    while not alive[b]:
        b += 1
    lo = a + 1
    hi = b - 1
    xj = x[j]
    for k in range(lo, hi + 1):
        if k < j:
            newv[k - lo] = interp(y[a], xj, a, j, k)
        elif k == j:
            newv[k - lo] = xj
        else:
            newv[k - lo] = interp(xj, y[b], j, b, k)
    return a, b, lo, hi


@njit(cache=True, nogil=True)
def _pacf_work(rho, out, phi, tmp):
    L = rho.shape[0]
    out[0] = rho[0]
    phi[0] = rho[0]
    for l in range(2, L + 1):
        num = rho[l - 1]
        den = 1.0
        for k in range(1, l):
            num -= phi[k - 1] * rho[l - 1 - k]
            den -= phi[k - 1] * rho[k - 1]
        if abs(den) < DL_TOL:
            return l
        p = num / den
        for k in range(1, l):
            tmp[k - 1] = phi[k - 1] - p * phi[l - 1 - k]
        for k in range(1, l):
            phi[k - 1] = tmp[k - 1]
        phi[l - 1] = p
        out[l - 1] = p
    return 0


@njit(cache=True, nogil=True)
def edit_outcome(st, cf, w0, w1, dA, wk):
    """Statistic after window changes dA, without touching st.

    Per lag this performs exactly the additions of ``accumulate``, so the
    evaluated and the committed aggregates agree bit for bit.  Returns the
    first degenerate/singular lag or 0; the statistic lands in wk.out.
    """
    S = st.S
    A = st.A
    N = cf.N
    L = cf.L
    rho = wk.rho
    for l in range(1, L + 1):
        lim = N - l
        sx = S[0, l - 1]
        sxl = S[1, l - 1]
        sx2 = S[2, l - 1]
        sx2l = S[3, l - 1]
        sxx = S[4, l - 1]
        for w in range(w0, w1 + 1):
            d = dA[w - w0]
            if d == 0.0:
                continue
            aw = A[w]
            q = d * (2.0 * aw + d)
            if w < lim:
                sx += d
                sx2 += q
                p = w + l
                sxx += d * A[p]
                if p <= w1:
                    sxx += d * dA[p - w0]
            if w >= l:
                sxl += d
                sx2l += q
                sxx += d * A[w - l]
        m = N - l
        num = m * sxx - sx * sxl
        d1 = m * sx2 - sx * sx
        d2 = m * sx2l - sxl * sxl
        if not (d1 > VAR_RTOL * m * sx2) or not (d2 > VAR_RTOL * m * sx2l):
            return l
        rho[l - 1] = num / (math.sqrt(d1) * math.sqrt(d2))
    if cf.stat == ACF:
        for i in range(L):
            wk.out[i] = rho[i]
        return 0
    return _pacf_work(rho, wk.out, wk.phi, wk.tmp)


@njit(cache=True, nogil=True)
def removal_impact(st, cf, j, wk):
    """Deviation from the reference if j were removed now (+inf if degenerate)."""
    lo, hi = removal_values(j, st.y, st.left, st.right, wk.newv)
    w0, w1 = window_deltas(lo, hi, wk.newv, st.y, st.A, cf.K, cf.agg, cf.N, wk.dA, wk.newA)
    bad = edit_outcome(st, cf, w0, w1, wk.dA, wk)
    if bad != 0:
        return np.inf, bad
    d = distance(cf.metric, st.ref, wk.out, st.smooth, cf.scale)
    if d != d:
        return np.inf, 0
    return d, 0


@njit(cache=True, nogil=True)
def work_for(st, cf, idx):
    span = 1
    for i in range(idx.shape[0]):
        j = idx[i]
        s = st.right[j] - st.left[j] - 1
        if s > span:
            span = s
    return make_work(span, cf.K, cf.L)


@njit(cache=True, nogil=True)
def impacts_for(st, cf, idx, out):
    wk = work_for(st, cf, idx)
    for i in range(idx.shape[0]):
        d, _ = removal_impact(st, cf, idx[i], wk)
        out[i] = d


@njit(cache=True, nogil=True)
def apply_span(st, cf, tr, lo, hi, newv):
    nw = (hi - lo) // cf.K + 2
    dA = np.empty(nw)
    newA = np.empty(nw)
    w0, w1 = window_deltas(lo, hi, newv, st.y, st.A, cf.K, cf.agg, cf.N, dA, newA)
    accumulate(st.S, st.A, w0, w1, dA, cf.N)
    if tr.on:
        accumulate_partition(tr, st.A, w0, w1, dA, cf.N)
    for k in range(lo, hi + 1):
        st.y[k] = newv[k - lo]
    for w in range(w0, w1 + 1):
        st.A[w] = newA[w - w0]


@njit(cache=True, nogil=True)
def commit_removal(st, cf, tr, j):
    newv = np.empty(st.right[j] - st.left[j] - 1)
    lo, hi = removal_values(j, st.y, st.left, st.right, newv)
    apply_span(st, cf, tr, lo, hi, newv)
    a = st.left[j]
    b = st.right[j]
    st.right[a] = b
    st.left[b] = a
    st.alive[j] = False
    st.counts[1] -= 1


@njit(cache=True, nogil=True)
def commit_restore(st, cf, tr, j):
    a = j - 1
    while not st.alive[a]:
        a -= 1
    b = j + 1
    while not st.alive[b]:
        b += 1
    newv = np.empty(b - a - 1)
    a, b, lo, hi = restore_values(j, st.x, st.y, st.alive, newv)
    apply_span(st, cf, tr, lo, hi, newv)
    st.alive[j] = True
    st.left[j] = a
    st.right[j] = b
    st.right[a] = j
    st.left[b] = j
    st.counts[1] += 1


# ---------------------------------------------------------------- heap

@njit(cache=True, nogil=True)
def _less(key, i, j):
    ki = key[i]
    kj = key[j]
    return ki < kj or (ki == kj and i < j)


@njit(cache=True, nogil=True)
def _sift_up(heap, pos, key, slot):
    p = heap[slot]
    while slot > 0:
        parent = (slot - 1) >> 1
        q = heap[parent]
        if _less(key, p, q):
            heap[slot] = q
            pos[q] = slot
            slot = parent
        else:
            break
    heap[slot] = p
    pos[p] = slot


@njit(cache=True, nogil=True)
def _sift_down(heap, pos, key, size, slot):
    p = heap[slot]
    while True:
        c = 2 * slot + 1
        if c >= size:
            break
        if c + 1 < size and _less(key, heap[c + 1], heap[c]):
            c += 1
        q = heap[c]
        if _less(key, q, p):
            heap[slot] = q
            pos[q] = slot
            slot = c
        else:
            break
    heap[slot] = p
    pos[p] = slot


@njit(cache=True, nogil=True)
def heap_build(st, members):
    """Floyd's bottom-up heapify over the given point ids."""
    size = members.shape[0]
    st.pos[:] = -1
    for s in range(size):
        st.heap[s] = members[s]
        st.pos[members[s]] = s
    st.counts[0] = size
    for s in range(size // 2 - 1, -1, -1):
        _sift_down(st.heap, st.pos, st.key, size, s)


@njit(cache=True, nogil=True)
def heap_pop(st):
    size = st.counts[0]
    top = st.heap[0]
    size -= 1
    st.counts[0] = size
    st.pos[top] = -1
    if size > 0:
        st.heap[0] = st.heap[size]
        st.pos[st.heap[0]] = 0
        _sift_down(st.heap, st.pos, st.key, size, 0)
    return top


@njit(cache=True, nogil=True)
def heap_push(st, p):
    size = st.counts[0]
    st.heap[size] = p
    st.pos[p] = size
    st.counts[0] = size + 1
    _sift_up(st.heap, st.pos, st.key, size)


@njit(cache=True, nogil=True)
def heap_update(st, p, k):
    old = st.key[p]
    st.key[p] = k
    slot = st.pos[p]
    if slot < 0:
        return
    if k < old or (k == old):
        _sift_up(st.heap, st.pos, st.key, slot)
    if k > old:
        _sift_down(st.heap, st.pos, st.key, st.counts[0], st.pos[p])


@njit(cache=True, nogil=True)
def heap_update_many(st, idx, vals):
    for i in range(idx.shape[0]):
        heap_update(st, idx[i], vals[i])


@njit(cache=True, nogil=True)
def heap_valid(st):
    size = st.counts[0]
    for s in range(size):
        if st.pos[st.heap[s]] != s:
            return False
        c = 2 * s + 1
        if c < size and _less(st.key, st.heap[c], st.heap[s]):
            return False
        if c + 1 < size and _less(st.key, st.heap[c + 1], st.heap[s]):
            return False
    return True


# ---------------------------------------------------------------- loop

@njit(cache=True, nogil=True)
def hop_neighbors(st, a, b, h):
    """Up to h heap members walking left from a and right from b."""
    out = np.empty(2 * h, dtype=np.int64)
    c = 0
    p = a
    hops = 0
    while hops < h and p >= 0 and st.pos[p] >= 0:
        out[c] = p
        c += 1
        hops += 1
        p = st.left[p]
    p = b
    hops = 0
    n = st.alive.shape[0]
    while hops < h and p < n and st.pos[p] >= 0:
        out[c] = p
        c += 1
        hops += 1
        p = st.right[p]
    return out[:c]


@njit(cache=True, nogil=True)
def reheap_serial(st, cf, j, h):
    if h <= 0:
        return
    idx = hop_neighbors(st, st.left[j], st.right[j], h)
    vals = np.empty(idx.shape[0])
    impacts_for(st, cf, idx, vals)
    heap_update_many(st, idx, vals)


@njit(cache=True, nogil=True)
def pop_and_commit(st, cf, tr, mode, eps, target_alive):
    """One greedy step without the re-ranking; returns (status, j)."""
    if mode == MODE_TARGET and st.counts[1] <= target_alive:
        return ST_TARGET, -1
    if st.counts[0] == 0 or st.key[st.heap[0]] == np.inf:
        return ST_EXHAUSTED, -1
    j = heap_pop(st)
    wk = make_work(st.right[j] - st.left[j] - 1, cf.K, cf.L)
    d, bad = removal_impact(st, cf, j, wk)
    if bad != 0:
        heap_push(st, j)
        st.cur[1] = bad
        return ST_DEGENERATE, j
    if mode == MODE_BOUND and d >= eps:
        heap_push(st, j)
        return ST_BOUND, j
    commit_removal(st, cf, tr, j)
    st.log[st.counts[2]] = j
    st.counts[2] += 1
    st.cur[0] = d
    return ST_STEPS, j


@njit(cache=True, nogil=True)
def greedy_run(st, cf, tr, h, mode, eps, target_alive, max_steps):
    steps = 0
    while steps < max_steps:
        status, j = pop_and_commit(st, cf, tr, mode, eps, target_alive)
        if status != ST_STEPS:
            return status, steps
        reheap_serial(st, cf, j, h)
        steps += 1
    return ST_STEPS, steps


@njit(cache=True, nogil=True)
def relink(alive, left, right):
    n = alive.shape[0]
    prev = -1
    for i in range(n):
        if alive[i]:
            left[i] = prev
            if prev >= 0:
                right[prev] = i
            prev = i
    if prev >= 0:
        right[prev] = n


@njit(cache=True, nogil=True)
def reconstruct(idx, vals, n, out):
    """Linear interpolation between kept points (same arithmetic as the engine)."""
    for r in range(idx.shape[0] - 1):
        a = idx[r]
        b = idx[r + 1]
        ya = vals[r]
        yb = vals[r + 1]
        out[a] = ya
        for k in range(a + 1, b):
            out[k] = interp(ya, yb, a, b, k)
    out[idx[idx.shape[0] - 1]] = vals[idx.shape[0] - 1]
