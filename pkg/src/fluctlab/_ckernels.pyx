# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Semantics are defined by fluctlab._kernels_py; this module must stay
observably equivalent (bit-identical for the Monte Carlo entry points, which
share the counter-based splitmix64 stream discipline).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

BACKEND_NAME = "compiled"

cdef extern from *:
    """
    typedef unsigned long long u64;
    """
    ctypedef unsigned long long u64

cdef u64 GAMMA = 0x9E3779B97F4A7C15ULL
cdef u64 MUL1 = 0xBF58476D1CE4E5B9ULL
cdef u64 MUL2 = 0x94D049BB133111EBULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline u64 mix64(u64 z) nogil:
    z = z + GAMMA
    z = (z ^ (z >> 30)) * MUL1
    z = (z ^ (z >> 27)) * MUL2
    return z ^ (z >> 31)


cdef inline double draw(u64 key, u64 k) nogil:
    return <double> (mix64(key + (k + 1) * GAMMA) >> 11) * INV53


def dp_killed(init_offset, init_vec, jump_lo, jump_probs, thresholds, caps,
              snapshots=(), record_sites=False):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] kern = \
        np.ascontiguousarray(jump_probs, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] thr_arr = \
        np.ascontiguousarray(thresholds, dtype=np.int64)
    cdef long n_steps = len(thr_arr)
    cdef long klen = len(kern)
    cdef long jlo = jump_lo
    cdef bint has_caps = caps is not None
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cap_arr
    if has_caps:
        cap_arr = np.ascontiguousarray(caps, dtype=np.int64)
    else:
        cap_arr = np.zeros(1, dtype=np.int64)

    init = np.ascontiguousarray(init_vec, dtype=np.float64)
    cdef long off = init_offset
    cdef long width = len(init)

    # global buffer bounds: lowest reachable site (one jump below the start
    # or below the lowest threshold shelf) and highest kept site
    cdef long glo = min(off, np.min(thr_arr) + 1) + jlo
    cdef long ghi
    if has_caps:
        ghi = max(off + width - 1, np.max(cap_arr)) + klen
    else:
        ghi = off + width - 1 + n_steps * (jlo + klen - 1)
    cdef long bufn = ghi - glo + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cur = np.zeros(bufn)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] nxt = np.zeros(bufn)
    cdef double[:] curv = cur
    cdef double[:] nxtv = nxt
    cdef double[:] kv = kern
    cdef long i, j, n, lo, hi, nlo, nhi, thr, cap, cut, d
    cdef double m, s, sy, dmass, ddepth

    for i in range(width):
        curv[off - glo + i] = init[i]
    lo = off - glo
    hi = off - glo + width - 1

    cdef bint rs = bool(record_sites)
    cdef long depth_max = 0
    if rs:
        if jlo >= 0:
            raise ValueError("site recording needs a downward jump")
        depth_max = 1 - jlo

    survival = np.zeros(n_steps + 1)
    absorbed_mass = np.zeros(n_steps)
    absorbed_depth = np.zeros(n_steps)
    alive_sum_y = np.zeros(n_steps + 1)
    loss = np.zeros(n_steps + 1)
    cdef double[:] surv_v = survival
    cdef double[:] am_v = absorbed_mass
    cdef double[:] ad_v = absorbed_depth
    cdef double[:] asy_v = alive_sum_y
    cdef double[:] loss_v = loss
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ab_sites
    cdef double[:, :] abs_v
    if rs:
        ab_sites = np.zeros((n_steps, depth_max))
        abs_v = ab_sites

    snaps = {}
    want = set(int(x) for x in snapshots)

    s = 0.0
    sy = 0.0
    for i in range(lo, hi + 1):
        s += curv[i]
        sy += (glo + i) * curv[i]
    surv_v[0] = s
    asy_v[0] = sy
    if 0 in want:
        snaps[0] = (glo + lo, cur[lo:hi + 1].copy())

    cdef double lost = 0.0
    cdef long[:] thr_v = thr_arr
    cdef long[:] cap_v = cap_arr

    for n in range(1, n_steps + 1):
        if hi < lo:
            # layer already empty: freeze, else lo would drift out of the
            # buffer one jump per step
            loss_v[n] = lost
            if n in want:
                snaps[n] = (glo + lo, np.zeros(1))
            continue
        nlo = lo + jlo
        nhi = hi + jlo + klen - 1
        for i in range(nlo, nhi + 1):
            nxtv[i] = 0.0
        for i in range(lo, hi + 1):
            m = curv[i]
            if m != 0.0:
                for j in range(klen):
                    nxtv[i + jlo + j] += m * kv[j]
        curv, nxtv = nxtv, curv

        thr = thr_v[n - 1]
        cut = thr + 1 - glo  # first kept buffer index
        dmass = 0.0
        ddepth = 0.0
        if cut > nlo:
            if cut > nhi + 1:
                cut = nhi + 1
            for i in range(nlo, cut):
                m = curv[i]
                if m != 0.0:
                    dmass += m
                    d = thr - (glo + i)
                    ddepth += d * m
                    if rs and d < depth_max:
                        abs_v[n - 1, d] += m
                curv[i] = 0.0
            nlo = cut
        am_v[n - 1] = dmass
        ad_v[n - 1] = ddepth

        if has_caps:
            cap = cap_v[n - 1]
            if glo + nhi > cap:
                for i in range(max(nlo, cap + 1 - glo), nhi + 1):
                    lost += curv[i]
                    curv[i] = 0.0
                nhi = cap - glo
                if nhi < nlo:
                    nhi = nlo - 1
        loss_v[n] = lost

        lo = nlo
        hi = nhi
        s = 0.0
        sy = 0.0
        for i in range(lo, hi + 1):
            s += curv[i]
            sy += (glo + i) * curv[i]
        surv_v[n] = s
        asy_v[n] = sy
        if n in want:
            if hi >= lo:
                snaps[n] = (glo + lo, np.asarray(curv[lo:hi + 1]).copy())
            else:
                snaps[n] = (glo + lo, np.zeros(1))

    if hi >= lo:
        final = (glo + lo, np.asarray(curv[lo:hi + 1]).copy())
    else:
        final = (glo + lo, np.zeros(1))

    out = {
        "survival": survival,
        "absorbed_mass": absorbed_mass,
        "absorbed_depth": absorbed_depth,
        "alive_sum_y": alive_sum_y,
        "loss": loss,
        "final": final,
        "snapshots": snaps,
    }
    if rs:
        out["absorbed_sites"] = ab_sites
    return out


def mc_walk(seed, stream, trial_lo, trial_hi, step_values, step_cdfs,
            thresholds, start=0.0):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vals = \
        np.ascontiguousarray(step_values, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cdfs = \
        np.ascontiguousarray(step_cdfs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] thr = \
        np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef long n_steps = len(thr)
    cdef long w = vals.shape[1]
    cdef long n_tr = trial_hi - trial_lo
    cdef double x0 = start

    exit_step = np.full(n_tr, n_steps + 1, dtype=np.int64)
    endpoint = np.zeros(n_tr)
    cdef long[:] es_v = exit_step
    cdef double[:] ep_v = endpoint
    cdef double[:, :] vv = vals
    cdef double[:, :] cv = cdfs
    cdef double[:] tv = thr

    cdef u64 base = mix64(mix64(<u64> seed) ^ <u64> stream)
    cdef u64 tlo = <u64> trial_lo
    cdef u64 key
    cdef long t, n, idx
    cdef double pos, u

    with nogil:
        for t in range(n_tr):
            key = mix64(base ^ (tlo + <u64> t))
            pos = x0
            for n in range(1, n_steps + 1):
                u = draw(key, n - 1)
                idx = 0
                while idx < w - 1 and u >= cv[n - 1, idx]:
                    idx += 1
                pos += vv[n - 1, idx]
                if pos <= tv[n - 1]:
                    es_v[t] = n
                    ep_v[t] = pos
                    break
            else:
                ep_v[t] = pos
    return exit_step, endpoint


def mc_chain(seed, stream, trial_lo, trial_hi, values, cdfs, widths, mode,
             start, n_steps, kill):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vals = \
        np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cdf_arr = \
        np.ascontiguousarray(cdfs, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] wid = \
        np.ascontiguousarray(widths, dtype=np.int64)
    cdef long n_tr = trial_hi - trial_lo
    cdef long nst = n_steps
    cdef int md = mode
    cdef bint do_kill = kill
    cdef double x0 = start

    exit_step = np.full(n_tr, nst + 1, dtype=np.int64)
    endpoint = np.zeros(n_tr)
    cdef long[:] es_v = exit_step
    cdef double[:] ep_v = endpoint
    cdef double[:, :] vv = vals
    cdef double[:, :] cv = cdf_arr
    cdef long[:] wv = wid

    cdef u64 base = mix64(mix64(<u64> seed) ^ <u64> stream)
    cdef u64 tlo = <u64> trial_lo
    cdef u64 key
    cdef long t, n, idx, li, w
    cdef double pos, u

    with nogil:
        for t in range(n_tr):
            key = mix64(base ^ (tlo + <u64> t))
            pos = x0
            for n in range(1, nst + 1):
                u = draw(key, n - 1)
                if md == 0:
                    li = 0
                else:
                    li = (<long> floor(pos)) & 1
                w = wv[li]
                idx = 0
                while idx < w - 1 and u >= cv[li, idx]:
                    idx += 1
                pos += vv[li, idx]
                if do_kill and pos <= 0.0:
                    es_v[t] = n
                    ep_v[t] = pos
                    break
            else:
                ep_v[t] = pos
    return exit_step, endpoint
