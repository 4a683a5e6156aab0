"""Pure-Python twin of the accelerated kernels.

Every function here must stay semantically identical to its compiled
counterpart in ``_kernels_cy.pyx`` (same arithmetic, same evaluation order);
the cross-twin equivalence tests enforce this. Keep both files in sync when
touching either.
"""

from __future__ import annotations

import numpy as np

IMPL = "python"

PEAK = 1
TROUGH = -1

# SignalKind numbers (kept as plain ints at the kernel boundary).
S1_UPTREND = 1
S2_DOWNTREND = 2
S3_REV_UP = 3
S4_REV_DOWN = 4
S5_INFORMED_SELL = 5
S6_INFORMED_BUY = 6


def candle_splits(high, low, close, volume):
    """Per-bar buy/sell volume split from candle geometry, vectorized.

    Buy fraction is (close - low) / (high - low), 0.5 for zero-range bars.
    """
    high = np.asarray(high, dtype=np.float64)
    low = np.asarray(low, dtype=np.float64)
    close = np.asarray(close, dtype=np.float64)
    volume = np.asarray(volume, dtype=np.float64)
    rng = high - low
    f = np.full(high.shape, 0.5)
    nz = rng > 0.0
    f[nz] = (close[nz] - low[nz]) / rng[nz]
    buy = f * volume
    sell = (1.0 - f) * volume
    return buy, sell


def window_sums(values, bounds):
    """Sum ``values`` over [bounds[i], bounds[i+1]) segments, left to right."""
    values = np.asarray(values, dtype=np.float64)
    out = np.empty(len(bounds) - 1, dtype=np.float64)
    for i in range(len(bounds) - 1):
        acc = 0.0
        for j in range(bounds[i], bounds[i + 1]):
            acc += values[j]
        out[i] = acc
    return out


def find_extrema(values, k):
    """Local extrema over a +/-k window with plateau suppression.

    Index i (k <= i <= n-1-k) is a peak when values[i] >= every value in
    [i-k, i+k] and values[i] != values[i-1]; troughs are mirrored. The
    inequality against i-1 keeps only the earliest index of a flat plateau
    and yields no extrema on constant stretches. Returns parallel arrays
    (indices, kinds) with kind +1 for peaks, -1 for troughs; an extremum at
    i is confirmed once bar i+k has been seen.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    idx: list[int] = []
    kind: list[int] = []
    for i in range(k, n - k):
        v = values[i]
        if v == values[i - 1]:
            continue
        is_peak = True
        is_trough = True
        for j in range(i - k, i + k + 1):
            if values[j] > v:
                is_peak = False
            if values[j] < v:
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


def _pair_ned(price_idx, ned_idx, ned_count, w):
    """Index of the nearest confirmed ned extremum within w bars, else -1.

    Ties between equally distant extrema resolve to the earlier index.
    ``ned_idx`` must be sorted; only the first ``ned_count`` entries are
    eligible (confirmed ones).
    """
    best = -1
    best_dist = w + 1
    for t in range(ned_count):
        j = ned_idx[t]
        dist = j - price_idx if j >= price_idx else price_idx - j
        if dist <= w and dist < best_dist:
            best = j
            best_dist = dist
    return best


def detect_fold(highs, lows, neds, k, eps_price, eps_ned, w, lookback):
    """Evaluate the six directional rules bar by bar.

    Returns a list of (bar_index, kind, strength, evidence) tuples where
    evidence is a tuple of the bar indices backing the decision. A rule
    fires at bar t only when its condition holds and at least one piece of
    its evidence (an extremum, or a ned pairing) was confirmed exactly at t,
    so each configuration of evidence fires once.
    """
    highs = np.asarray(highs, dtype=np.float64)
    lows = np.asarray(lows, dtype=np.float64)
    neds = np.asarray(neds, dtype=np.float64)
    n = len(highs)

    pp_idx, pp_kind = find_extrema(highs, k)
    pt_idx, pt_kind = find_extrema(lows, k)
    nx_idx, nx_kind = find_extrema(neds, k)
    pp = [int(i) for i, kd in zip(pp_idx, pp_kind) if kd == PEAK]
    pt = [int(i) for i, kd in zip(pt_idx, pt_kind) if kd == TROUGH]
    np_ = [int(i) for i, kd in zip(nx_idx, nx_kind) if kd == PEAK]
    nt = [int(i) for i, kd in zip(nx_idx, nx_kind) if kd == TROUGH]

    events: list[tuple] = []
    last_s2 = -(10**9)  # bar index of the most recent S2
    # Counts of confirmed extrema per stream as of the current bar.
    c_pp = c_pt = c_np = c_nt = 0

    for t in range(n):
        new_conf = False
        while c_pp < len(pp) and pp[c_pp] + k <= t:
            c_pp += 1
            new_conf = True
        while c_pt < len(pt) and pt[c_pt] + k <= t:
            c_pt += 1
            new_conf = True
        while c_np < len(np_) and np_[c_np] + k <= t:
            c_np += 1
            new_conf = True
        while c_nt < len(nt) and nt[c_nt] + k <= t:
            c_nt += 1
            new_conf = True
        if not new_conf:
            continue

        conf_at_t = (
            (c_pp > 0 and pp[c_pp - 1] + k == t),
            (c_pt > 0 and pt[c_pt - 1] + k == t),
            (c_np > 0 and np_[c_np - 1] + k == t),
            (c_nt > 0 and nt[c_nt - 1] + k == t),
        )
        new_pp, new_pt, new_np, new_nt = conf_at_t

        # S1 / S2: the four extrema streams all rising / all falling.
        if c_pp >= 2 and c_pt >= 2 and c_np >= 2 and c_nt >= 2:
            pp1, pp2 = pp[c_pp - 2], pp[c_pp - 1]
            pt1, pt2 = pt[c_pt - 2], pt[c_pt - 1]
            np1, np2 = np_[c_np - 2], np_[c_np - 1]
            nt1, nt2 = nt[c_nt - 2], nt[c_nt - 1]
            if new_pp or new_pt or new_np or new_nt:
                evidence = (pp1, pp2, pt1, pt2, np1, np2, nt1, nt2)
                pp_rise = highs[pp2] > highs[pp1] * (1.0 + eps_price)
                pt_rise = lows[pt2] > lows[pt1] * (1.0 + eps_price)
                np_rise = neds[np2] > neds[np1] + eps_ned
                nt_rise = neds[nt2] > neds[nt1] + eps_ned
                if pp_rise and pt_rise and np_rise and nt_rise:
                    gap = min(neds[np2] - neds[np1], neds[nt2] - neds[nt1])
                    events.append((t, S1_UPTREND, _strength(gap, eps_ned), evidence))
                pp_fall = highs[pp2] < highs[pp1] * (1.0 - eps_price)
                pt_fall = lows[pt2] < lows[pt1] * (1.0 - eps_price)
                np_fall = neds[np2] < neds[np1] - eps_ned
                nt_fall = neds[nt2] < neds[nt1] - eps_ned
                if pp_fall and pt_fall and np_fall and nt_fall:
                    gap = min(neds[np1] - neds[np2], neds[nt1] - neds[nt2])
                    events.append((t, S2_DOWNTREND, _strength(gap, eps_ned), evidence))
                    last_s2 = t

        # S3: after a recent downtrend, ned trough holds or deepens while
        # the price trough rises.
        if c_nt >= 2 and c_pt >= 2 and (new_nt or new_pt):
            if t - last_s2 <= lookback:
                nt1, nt2 = nt[c_nt - 2], nt[c_nt - 1]
                pt1, pt2 = pt[c_pt - 2], pt[c_pt - 1]
                if (
                    neds[nt2] <= neds[nt1] + eps_ned
                    and lows[pt2] > lows[pt1] * (1.0 + eps_price)
                ):
                    gap = neds[nt1] - neds[nt2]
                    events.append(
                        (t, S3_REV_UP, _strength(gap, eps_ned), (nt1, nt2, pt1, pt2))
                    )

        # S4: ned peak holds or rises while the price peak falls short.
        if c_np >= 2 and c_pp >= 2 and (new_np or new_pp):
            np1, np2 = np_[c_np - 2], np_[c_np - 1]
            pp1, pp2 = pp[c_pp - 2], pp[c_pp - 1]
            if (
                neds[np2] >= neds[np1] - eps_ned
                and highs[pp2] < highs[pp1] * (1.0 - eps_price)
            ):
                gap = neds[np2] - neds[np1]
                events.append(
                    (t, S4_REV_DOWN, _strength(gap, eps_ned), (np1, np2, pp1, pp2))
                )

        # S5: at a price peak matching the prior high, the paired ned reading
        # drops: informed selling.
        if c_pp >= 2:
            pp1, pp2 = pp[c_pp - 2], pp[c_pp - 1]
            j1 = _pair_ned(pp1, np_, c_np, w)
            j2 = _pair_ned(pp2, np_, c_np, w)
            trig = new_pp or (new_np and (j1 == np_[c_np - 1] or j2 == np_[c_np - 1]))
            if trig:
                v1 = neds[j1] if j1 >= 0 else neds[pp1]
                v2 = neds[j2] if j2 >= 0 else neds[pp2]
                if (
                    highs[pp2] >= highs[pp1] * (1.0 - eps_price)
                    and v2 < v1 - eps_ned
                ):
                    ev = (pp1, pp2, j1 if j1 >= 0 else pp1, j2 if j2 >= 0 else pp2)
                    events.append((t, S5_INFORMED_SELL, _strength(v1 - v2, eps_ned), ev))

        # S6: mirror of S5 at price troughs: informed buying.
        if c_pt >= 2:
            pt1, pt2 = pt[c_pt - 2], pt[c_pt - 1]
            j1 = _pair_ned(pt1, nt, c_nt, w)
            j2 = _pair_ned(pt2, nt, c_nt, w)
            trig = new_pt or (new_nt and (j1 == nt[c_nt - 1] or j2 == nt[c_nt - 1]))
            if trig:
                v1 = neds[j1] if j1 >= 0 else neds[pt1]
                v2 = neds[j2] if j2 >= 0 else neds[pt2]
                if (
                    lows[pt2] <= lows[pt1] * (1.0 + eps_price)
                    and v2 > v1 + eps_ned
                ):
                    ev = (pt1, pt2, j1 if j1 >= 0 else pt1, j2 if j2 >= 0 else pt2)
                    events.append((t, S6_INFORMED_BUY, _strength(v2 - v1, eps_ned), ev))

    return events


def _strength(gap: float, eps_ned: float) -> float:
    if gap < 0.0:
        gap = 0.0
    return gap / eps_ned if eps_ned > 0.0 else gap
