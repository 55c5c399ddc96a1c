"""Compiled event kernel for the facilitated exclusion dynamics.

One Gillespie loop serves both topologies: all jump rates are 1, so the
exact simulation draws an Exponential(n_active) holding time and a uniform
active bond per event.  The active set is an indexed swap-remove array with
O(1) insert/delete/sample; after a jump only the bonds whose rate factor
reads a changed site (x-1 .. x+2) are re-examined.

Randomness is an explicit SplitMix64 counter sequence over a 64-bit key, so
a trajectory is a pure function of (initial state, key, counter); the pure
Python engine in :mod:`ftasep.dynamics` consumes the identical sequence and
is cross-checked bit-for-bit in the tests.

Self-checks run inside the loop and are reported as violation counters
(the Python layer raises on any nonzero entry):

* index 0: conservation broken (particle count, minus exits on open segments),
* index 1: incremental active set differs from a from-scratch recount
  (checked at every power-of-two event count),
* index 2: n00 increased across an event (rings),
* index 3: n11 increased across an event (rings),
* index 4: pair-count identity n11 - n00 = 2k - L broken (rings).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_S32 = np.uint64(32)

#: columns of a sample row
ROW_T = 0
ROW_N11 = 1
ROW_N10 = 2
ROW_N01 = 3
ROW_N00 = 4
ROW_ACTIVE = 5
ROW_CROSS = 6
ROW_EXITED = 7
N_COLS = 8

N_VIOL = 5


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def _unit(z):
    return (np.float64(z >> _S12) + 0.5) * 2.0**-52


@njit(inline="always")
def _pick(z, n):
    return np.int64((np.uint64(z >> _S32) * np.uint64(n)) >> _S32)


@njit(inline="always")
def _is_active(occ, x, L, ring, exit_right):
    if ring:
        return occ[(x - 1) % L] == 1 and occ[x] == 1 and occ[(x + 1) % L] == 0
    if x == 0:
        return False  # left neighbor unknown outside the window
    if x == L - 1:
        return exit_right and occ[L - 2] == 1 and occ[L - 1] == 1
    return occ[x - 1] == 1 and occ[x] == 1 and occ[x + 1] == 0


@njit(cache=True)
def scan_active(occ, ring, exit_right):
    """All active bond indices, by full scan."""
    L = occ.shape[0]
    out = np.empty(L, np.int64)
    n = 0
    for x in range(L):
        if _is_active(occ, x, L, ring, exit_right):
            out[n] = x
            n += 1
    return out[:n]


@njit(inline="always")
def _write_row(
    out, snaps, want_snaps, row, at, occ, ring, n11, n10, n00, n_active, crossings, exited
):
    L = occ.shape[0]
    if ring:
        r11, r10, r01, r00 = n11, n10, n10, n00
    else:
        r11 = np.int64(0)
        r10 = np.int64(0)
        r01 = np.int64(0)
        r00 = np.int64(0)
        for j in range(L - 1):
            a = occ[j]
            b = occ[j + 1]
            if a == 1 and b == 1:
                r11 += 1
            elif a == 1:
                r10 += 1
            elif b == 1:
                r01 += 1
            else:
                r00 += 1
    out[row, ROW_T] = at
    out[row, ROW_N11] = r11
    out[row, ROW_N10] = r10
    out[row, ROW_N01] = r01
    out[row, ROW_N00] = r00
    out[row, ROW_ACTIVE] = n_active
    out[row, ROW_CROSS] = crossings
    out[row, ROW_EXITED] = exited
    if want_snaps:
        for j in range(L):
            snaps[row, j] = occ[j]


@njit(cache=True)
def run_gillespie(
    occ,
    ring,
    exit_right,
    key,
    counter,
    t0,
    t_max,
    max_events,
    checkpoints,
    stride,
    track_bond,
    crossings0,
    exited0,
    want_snaps,
    out,
    snaps,
    viol,
):
    """Advance the state in place; fill sample rows; return run summary.

    Returns (t, applied, absorbed, n_rows, crossings, exited, counter,
    last_event_t).  Sample rows are emitted at t0, at each checkpoint time,
    every ``stride`` events (if stride > 0), and at the stopping time, with
    strictly increasing times; if the run absorbs, the remaining checkpoint
    rows are emitted for the frozen state.
    """
    L = occ.shape[0]

    items = np.empty(L, np.int64)
    pos = np.full(L, -1, np.int64)
    n_active = np.int64(0)
    k0 = np.int64(0)
    for x in range(L):
        k0 += occ[x]
        if _is_active(occ, x, L, ring, exit_right):
            items[n_active] = x
            pos[x] = n_active
            n_active += 1

    # ring pair counts, maintained incrementally across events
    n11 = np.int64(0)
    n10 = np.int64(0)
    n00 = np.int64(0)
    if ring:
        for x in range(L):
            a = occ[x]
            b = occ[(x + 1) % L]
            if a == 1 and b == 1:
                n11 += 1
            elif a == 1:
                n10 += 1
            elif b == 0:
                n00 += 1

    t = t0
    applied = np.int64(0)
    crossings = crossings0
    exited = exited0
    last_event_t = t0
    c = counter
    n_rows = np.int64(0)
    max_rows = out.shape[0]
    ncp = checkpoints.shape[0]
    cp_i = 0
    while cp_i < ncp and checkpoints[cp_i] <= t0:
        cp_i += 1

    if max_rows < 1:
        raise RuntimeError("sample buffer overflow")
    _write_row(
        out, snaps, want_snaps, n_rows, t, occ, ring, n11, n10, n00, n_active, crossings, exited
    )
    last_row_t = t
    n_rows += 1

    horizon_hit = False
    while n_active > 0 and applied < max_events:
        c += np.uint64(1)
        z = _mix64(key + c * _GAMMA)
        t_next = t - math.log(_unit(z)) / n_active

        # checkpoints crossed before the next event sample the current state
        cap = t_next if t_next < t_max else t_max
        while cp_i < ncp and checkpoints[cp_i] <= cap:
            at = checkpoints[cp_i]
            cp_i += 1
            if at <= last_row_t:
                continue
            if n_rows >= max_rows:
                raise RuntimeError("sample buffer overflow")
            _write_row(
                out, snaps, want_snaps, n_rows, at, occ, ring, n11, n10, n00,
                n_active, crossings, exited,
            )
            last_row_t = at
            n_rows += 1

        if t_next > t_max:
            t = t_max
            horizon_hit = True
            break
        t = t_next

        c += np.uint64(1)
        z = _mix64(key + c * _GAMMA)
        x = items[_pick(z, n_active)]
        last_event_t = t

        # apply the swap at bond x
        if ring:
            b = occ[(x + 2) % L]
            occ[x] = 0
            occ[(x + 1) % L] = 1
            # pairs (x-1,x): 11->10, (x,x+1): 10->01, (x+1,x+2): 0b->1b
            old00 = n00
            old11 = n11
            n11 -= 1
            if b == 1:
                n11 += 1
            else:
                n00 -= 1
                n10 += 1
            if n00 > old00:
                viol[2] += 1
            if n11 > old11:
                viol[3] += 1
            if n11 - n00 != 2 * k0 - L:
                viol[4] += 1
        else:
            occ[x] = 0
            if x == L - 1:
                exited += 1
            else:
                occ[x + 1] = 1
        if x == track_bond:
            crossings += 1
        applied += 1

        # re-examine the only bonds whose rate factor reads a changed site
        for s in range(x - 1, x + 3):
            if ring:
                sm = s % L
            else:
                if s < 0 or s > L - 1:
                    continue
                sm = s
            act = _is_active(occ, sm, L, ring, exit_right)
            if act and pos[sm] < 0:
                items[n_active] = sm
                pos[sm] = n_active
                n_active += 1
            elif (not act) and pos[sm] >= 0:
                i = pos[sm]
                last = items[n_active - 1]
                items[i] = last
                pos[last] = i
                pos[sm] = -1
                n_active -= 1

        # periodic self-checks at power-of-two event counts
        if applied & (applied - 1) == 0:
            ksum = np.int64(0)
            recount = np.int64(0)
            coherent = True
            for y in range(L):
                ksum += occ[y]
                act = _is_active(occ, y, L, ring, exit_right)
                if act:
                    recount += 1
                if act != (pos[y] >= 0):
                    coherent = False
            if ksum != k0 - exited:
                viol[0] += 1
            if recount != n_active or not coherent:
                viol[1] += 1

        if stride > 0 and applied % stride == 0 and t > last_row_t:
            if n_rows >= max_rows:
                raise RuntimeError("sample buffer overflow")
            _write_row(
                out, snaps, want_snaps, n_rows, t, occ, ring, n11, n10, n00,
                n_active, crossings, exited,
            )
            last_row_t = t
            n_rows += 1

    absorbed = n_active == 0

    if t > last_row_t:
        if n_rows >= max_rows:
            raise RuntimeError("sample buffer overflow")
        _write_row(
            out, snaps, want_snaps, n_rows, t, occ, ring, n11, n10, n00,
            n_active, crossings, exited,
        )
        last_row_t = t
        n_rows += 1

    # a frozen state persists, so remaining checkpoint rows are well defined
    if absorbed and not horizon_hit:
        while cp_i < ncp and checkpoints[cp_i] <= t_max:
            at = checkpoints[cp_i]
            cp_i += 1
            if at <= last_row_t:
                continue
            if n_rows >= max_rows:
                raise RuntimeError("sample buffer overflow")
            _write_row(
                out, snaps, want_snaps, n_rows, at, occ, ring, n11, n10, n00,
                n_active, crossings, exited,
            )
            last_row_t = at
            n_rows += 1

    return t, applied, absorbed, n_rows, crossings, exited, c, last_event_t
