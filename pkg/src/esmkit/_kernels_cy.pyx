# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the hot kernels.

Must stay semantically identical to ``_kernels_py.py`` (same arithmetic,
same evaluation order); the cross-twin equivalence tests enforce this.
Keep both files in sync when touching either.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPL = "cython"

PEAK = 1
TROUGH = -1

S1_UPTREND = 1
S2_DOWNTREND = 2
S3_REV_UP = 3
S4_REV_DOWN = 4
S5_INFORMED_SELL = 5
S6_INFORMED_BUY = 6


def candle_splits(high, low, close, volume):
    """Per-bar buy/sell volume split from candle geometry."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = np.ascontiguousarray(high, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l = np.ascontiguousarray(low, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c = np.ascontiguousarray(close, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.ascontiguousarray(volume, dtype=np.float64)
    cdef Py_ssize_t n = h.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buy = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sell = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double rng, f
    for i in range(n):
        rng = h[i] - l[i]
        if rng > 0.0:
            f = (c[i] - l[i]) / rng
        else:
            f = 0.5
        buy[i] = f * v[i]
        sell[i] = (1.0 - f) * v[i]
    return buy, sell


def window_sums(values, bounds):
    """Sum ``values`` over [bounds[i], bounds[i+1]) segments, left to right."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] b = np.ascontiguousarray(bounds, dtype=np.int64)
    cdef Py_ssize_t m = b.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(m):
        acc = 0.0
        for j in range(b[i], b[i + 1]):
            acc += vals[j]
        out[i] = acc
    return out


def find_extrema(values, int k):
    """Local extrema over a +/-k window with plateau suppression.

    Same contract as the pure twin: peak when values[i] >= all of
    [i-k, i+k] and values[i] != values[i-1]; troughs mirrored.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = vals.shape[0]
    cdef list idx = []
    cdef list kind = []
    cdef Py_ssize_t i, j
    cdef double v
    cdef bint is_peak, is_trough
    for i in range(k, n - k):
        v = vals[i]
        if v == vals[i - 1]:
            continue
        is_peak = True
        is_trough = True
        for j in range(i - k, i + k + 1):
            if vals[j] > v:
                is_peak = False
            if vals[j] < v:
                is_trough = False
            if not is_peak and not is_trough:
                break
        if is_peak:
            idx.append(i)
            kind.append(PEAK)
        elif is_trough:
            idx.append(i)
            kind.append(TROUGH)
    return (
        np.asarray(idx, dtype=np.int64),
        np.asarray(kind, dtype=np.int64),
    )


cdef Py_ssize_t _pair_ned(Py_ssize_t price_idx, cnp.int64_t[:] ned_idx,
                          Py_ssize_t ned_count, Py_ssize_t w) noexcept:
    """Index of the nearest confirmed ned extremum within w bars, else -1."""
    cdef Py_ssize_t best = -1
    cdef Py_ssize_t best_dist = w + 1
    cdef Py_ssize_t t, j, dist
    for t in range(ned_count):
        j = ned_idx[t]
        dist = j - price_idx if j >= price_idx else price_idx - j
        if dist <= w and dist < best_dist:
            best = j
            best_dist = dist
    return best


cdef inline double _strength(double gap, double eps_ned) noexcept:
    if gap < 0.0:
        gap = 0.0
    return gap / eps_ned if eps_ned > 0.0 else gap


def detect_fold(highs, lows, neds, int k, double eps_price, double eps_ned,
                int w, int lookback):
    """Evaluate the six directional rules bar by bar (see pure twin docs)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = np.ascontiguousarray(highs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lo_ = np.ascontiguousarray(lows, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] nd = np.ascontiguousarray(neds, dtype=np.float64)
    cdef Py_ssize_t n = h.shape[0]

    pp_i, pp_k = find_extrema(h, k)
    pt_i, pt_k = find_extrema(lo_, k)
    nx_i, nx_k = find_extrema(nd, k)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pp = pp_i[pp_k == PEAK]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pt = pt_i[pt_k == TROUGH]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] np_ = nx_i[nx_k == PEAK]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nt = nx_i[nx_k == TROUGH]
    cdef Py_ssize_t n_pp = pp.shape[0], n_pt = pt.shape[0]
    cdef Py_ssize_t n_np = np_.shape[0], n_nt = nt.shape[0]

    cdef list events = []
    cdef long long last_s2 = -1000000000
    cdef Py_ssize_t c_pp = 0, c_pt = 0, c_np = 0, c_nt = 0
    cdef Py_ssize_t t, pp1, pp2, pt1, pt2, np1, np2, nt1, nt2, j1, j2
    cdef bint new_conf, new_pp, new_pt, new_np, new_nt, trig
    cdef bint pp_rise, pt_rise, np_rise, nt_rise
    cdef bint pp_fall, pt_fall, np_fall, nt_fall
    cdef double gap, v1, v2

    for t in range(n):
        new_conf = False
        while c_pp < n_pp and pp[c_pp] + k <= t:
            c_pp += 1
            new_conf = True
        while c_pt < n_pt and pt[c_pt] + k <= t:
            c_pt += 1
            new_conf = True
        while c_np < n_np and np_[c_np] + k <= t:
            c_np += 1
            new_conf = True
        while c_nt < n_nt and nt[c_nt] + k <= t:
            c_nt += 1
            new_conf = True
        if not new_conf:
            continue

        new_pp = c_pp > 0 and pp[c_pp - 1] + k == t
        new_pt = c_pt > 0 and pt[c_pt - 1] + k == t
        new_np = c_np > 0 and np_[c_np - 1] + k == t
        new_nt = c_nt > 0 and nt[c_nt - 1] + k == t

        # S1 / S2: the four extrema streams all rising / all falling.
        if c_pp >= 2 and c_pt >= 2 and c_np >= 2 and c_nt >= 2:
            pp1 = pp[c_pp - 2]; pp2 = pp[c_pp - 1]
            pt1 = pt[c_pt - 2]; pt2 = pt[c_pt - 1]
            np1 = np_[c_np - 2]; np2 = np_[c_np - 1]
            nt1 = nt[c_nt - 2]; nt2 = nt[c_nt - 1]
            if new_pp or new_pt or new_np or new_nt:
                evidence = (pp1, pp2, pt1, pt2, np1, np2, nt1, nt2)
                pp_rise = h[pp2] > h[pp1] * (1.0 + eps_price)
                pt_rise = lo_[pt2] > lo_[pt1] * (1.0 + eps_price)
                np_rise = nd[np2] > nd[np1] + eps_ned
                nt_rise = nd[nt2] > nd[nt1] + eps_ned
                if pp_rise and pt_rise and np_rise and nt_rise:
                    gap = min(nd[np2] - nd[np1], nd[nt2] - nd[nt1])
                    events.append((t, S1_UPTREND, _strength(gap, eps_ned), evidence))
                pp_fall = h[pp2] < h[pp1] * (1.0 - eps_price)
                pt_fall = lo_[pt2] < lo_[pt1] * (1.0 - eps_price)
                np_fall = nd[np2] < nd[np1] - eps_ned
                nt_fall = nd[nt2] < nd[nt1] - eps_ned
                if pp_fall and pt_fall and np_fall and nt_fall:
                    gap = min(nd[np1] - nd[np2], nd[nt1] - nd[nt2])
                    events.append((t, S2_DOWNTREND, _strength(gap, eps_ned), evidence))
                    last_s2 = t

        # S3: after a recent downtrend, ned trough holds or deepens while
        # the price trough rises.
        if c_nt >= 2 and c_pt >= 2 and (new_nt or new_pt):
            if t - last_s2 <= lookback:
                nt1 = nt[c_nt - 2]; nt2 = nt[c_nt - 1]
                pt1 = pt[c_pt - 2]; pt2 = pt[c_pt - 1]
                if (nd[nt2] <= nd[nt1] + eps_ned
                        and lo_[pt2] > lo_[pt1] * (1.0 + eps_price)):
                    gap = nd[nt1] - nd[nt2]
                    events.append(
                        (t, S3_REV_UP, _strength(gap, eps_ned), (nt1, nt2, pt1, pt2))
                    )

        # S4: ned peak holds or rises while the price peak falls short.
        if c_np >= 2 and c_pp >= 2 and (new_np or new_pp):
            np1 = np_[c_np - 2]; np2 = np_[c_np - 1]
            pp1 = pp[c_pp - 2]; pp2 = pp[c_pp - 1]
            if (nd[np2] >= nd[np1] - eps_ned
                    and h[pp2] < h[pp1] * (1.0 - eps_price)):
                gap = nd[np2] - nd[np1]
                events.append(
                    (t, S4_REV_DOWN, _strength(gap, eps_ned), (np1, np2, pp1, pp2))
                )

        # S5: at a price peak matching the prior high, the paired ned reading
        # drops: informed selling.
        if c_pp >= 2:
            pp1 = pp[c_pp - 2]; pp2 = pp[c_pp - 1]
            j1 = _pair_ned(pp1, np_, c_np, w)
            j2 = _pair_ned(pp2, np_, c_np, w)
            trig = new_pp or (new_np and (j1 == np_[c_np - 1] or j2 == np_[c_np - 1]))
            if trig:
                v1 = nd[j1] if j1 >= 0 else nd[pp1]
                v2 = nd[j2] if j2 >= 0 else nd[pp2]
                if (h[pp2] >= h[pp1] * (1.0 - eps_price)
                        and v2 < v1 - eps_ned):
                    ev = (pp1, pp2, j1 if j1 >= 0 else pp1, j2 if j2 >= 0 else pp2)
                    events.append((t, S5_INFORMED_SELL, _strength(v1 - v2, eps_ned), ev))

        # S6: mirror of S5 at price troughs: informed buying.
        if c_pt >= 2:
            pt1 = pt[c_pt - 2]; pt2 = pt[c_pt - 1]
            j1 = _pair_ned(pt1, nt, c_nt, w)
            j2 = _pair_ned(pt2, nt, c_nt, w)
            trig = new_pt or (new_nt and (j1 == nt[c_nt - 1] or j2 == nt[c_nt - 1]))
            if trig:
                v1 = nd[j1] if j1 >= 0 else nd[pt1]
                v2 = nd[j2] if j2 >= 0 else nd[pt2]
                if (lo_[pt2] <= lo_[pt1] * (1.0 + eps_price)
                        and v2 > v1 + eps_ned):
                    ev = (pt1, pt2, j1 if j1 >= 0 else pt1, j2 if j2 >= 0 else pt2)
                    events.append((t, S6_INFORMED_BUY, _strength(v2 - v1, eps_ned), ev))

    return events
