"""Inner loop of the optimal-shift search.

Operates on "items" (observations, tie groups, or score buckets) that carry
per-arm counts and outcome sums. One directional sweep repeatedly finds the
cheapest rank inversion between the shifted and unshifted sides, exchanges
the two items' levels, and updates the cumulative uplift tables in place, so
each candidate's AUUC change costs O(levels) instead of a full recount.

Written as a plain function and compiled with numba when available; the
Python body is the reference semantics either way.
"""

from __future__ import annotations

import numpy as np


def _scan_direction_py(
    theta,  # float64[I], item scores, nondecreasing
    shifted,  # int8[I], 1 when the item belongs to the shifted side
    level0,  # int64[I], initial levels in [0, m)
    cnt0,
    cnt1,  # int64[I], member counts by arm
    sum0,
    sum1,  # float64[I], member outcome sums by arm
    m,  # number of levels
    eps_step,  # base nudge added past each crossing
    rise_shifted,  # 1: shifted side moves up (positive shifts); 0: down (negative)
    out_shift,  # float64[cap], cumulative |shift| per recorded candidate
    out_delta,  # float64[cap], cumulative AUUC change per candidate
    out_lo,
    out_hi,  # int64[cap], the exchanged (rising, falling) items
    out_levels,  # int64[I], final level of every item after the sweep
):
    n_items = theta.shape[0]
    levels = level0.copy()

    # cumulative tables over levels >= r, by arm
    g_n0 = np.zeros(m, np.int64)
    g_n1 = np.zeros(m, np.int64)
    g_s0 = np.zeros(m, np.float64)
    g_s1 = np.zeros(m, np.float64)
    for i in range(n_items):
        r = levels[i]
        g_n0[r] += cnt0[i]
        g_n1[r] += cnt1[i]
        g_s0[r] += sum0[i]
        g_s1[r] += sum1[i]
    for r in range(m - 2, -1, -1):
        g_n0[r] += g_n0[r + 1]
        g_n1[r] += g_n1[r + 1]
        g_s0[r] += g_s0[r + 1]
        g_s1[r] += g_s1[r + 1]

    # static sorted scores of the non-rising side, for crossing-window bounds
    n_hi_side = 0
    for i in range(n_items):
        if shifted[i] != rise_shifted:
            n_hi_side += 1
    hi_values = np.empty(n_hi_side, np.float64)
    k = 0
    for i in range(n_items):
        if shifted[i] != rise_shifted:
            hi_values[k] = theta[i]
            k += 1
    hi_values = np.sort(hi_values)

    min_score = np.empty(m, np.float64)
    min_arg = np.empty(m, np.int64)
    suf_score = np.empty(m + 1, np.float64)
    suf_arg = np.empty(m + 1, np.int64)

    d = 0.0
    delta = 0.0
    count = 0
    while True:
        # cheapest pending inversion: a rising-side item lo below some
        # opposite-side item hi in level but within minimal score distance
        for r in range(m):
            min_score[r] = np.inf
            min_arg[r] = -1
        for i in range(n_items):
            if shifted[i] != rise_shifted:
                r = levels[i]
                if theta[i] < min_score[r]:
                    min_score[r] = theta[i]
                    min_arg[r] = i
        suf_score[m] = np.inf
        suf_arg[m] = -1
        for r in range(m - 1, -1, -1):
            if min_score[r] < suf_score[r + 1]:
                suf_score[r] = min_score[r]
                suf_arg[r] = min_arg[r]
            else:
                suf_score[r] = suf_score[r + 1]
                suf_arg[r] = suf_arg[r + 1]

        best_key = np.inf
        second_key = np.inf
        best_lo = -1
        best_hi = -1
        for i in range(n_items):
            if shifted[i] == rise_shifted and levels[i] < m - 1:
                hi = suf_arg[levels[i] + 1]
                if hi >= 0:
                    key = suf_score[levels[i] + 1] - theta[i]
                    if key < best_key:
                        second_key = best_key
                        best_key = key
                        best_lo = i
                        best_hi = hi
                    elif key < second_key and key > best_key:
                        second_key = key
        if best_lo < 0:
            break

        # keep the nudge below the next distinct crossing so the realized
        # shift performs exactly this exchange and nothing more
        step = eps_step
        if second_key < np.inf:
            half = (second_key - best_key) * 0.5
            if 0.0 < half < step:
                step = half
        pos = np.searchsorted(hi_values, theta[best_hi], side="right")
        if pos < n_hi_side:
            half = (hi_values[pos] - theta[best_hi]) * 0.5
            if 0.0 < half < step:
                step = half

        gap = best_key - d
        if gap > 0.0:
            d += gap
        d += step

        r_lo = levels[best_lo]
        r_hi = levels[best_hi]
        dn0 = cnt0[best_lo] - cnt0[best_hi]
        dn1 = cnt1[best_lo] - cnt1[best_hi]
        ds0 = sum0[best_lo] - sum0[best_hi]
        ds1 = sum1[best_lo] - sum1[best_hi]
        for r in range(r_lo + 1, r_hi + 1):
            if g_n1[r] == 0 or g_n0[r] == 0:
                v_old = 0.0
            else:
                v_old = g_s1[r] / g_n1[r] - g_s0[r] / g_n0[r]
            g_n0[r] += dn0
            g_n1[r] += dn1
            g_s0[r] += ds0
            g_s1[r] += ds1
            if g_n1[r] == 0 or g_n0[r] == 0:
                v_new = 0.0
            else:
                v_new = g_s1[r] / g_n1[r] - g_s0[r] / g_n0[r]
            delta += ((m - r) / m) * (v_new - v_old)
        levels[best_lo] = r_hi
        levels[best_hi] = r_lo

        out_shift[count] = d
        out_delta[count] = delta
        out_lo[count] = best_lo
        out_hi[count] = best_hi
        count += 1
        if count >= out_shift.shape[0]:
            break

    for i in range(n_items):
        out_levels[i] = levels[i]
    return count


try:
    from numba import njit

    scan_direction = njit(cache=True)(_scan_direction_py)
except ImportError:  # pragma: no cover
    scan_direction = _scan_direction_py
