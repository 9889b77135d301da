# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same draws and outputs as ``_fallback.py``."""

from libc.stdint cimport uint64_t, int64_t, uint8_t
import numpy as np

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t sm_mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline double sm_uniform(uint64_t key, uint64_t c) {
        return (double)(sm_mix(key + (c + 1) * 0x9E3779B97F4A7C15ULL) >> 11) * (1.0 / 9007199254740992.0);
    }
    static inline uint64_t sm_derive(uint64_t key, uint64_t i) {
        return sm_mix(key ^ sm_mix((i + 1) * 0xD1B54A32D192ED03ULL));
    }
    """
    uint64_t sm_mix(uint64_t z) nogil
    double sm_uniform(uint64_t key, uint64_t c) nogil
    uint64_t sm_derive(uint64_t key, uint64_t i) nogil


cdef inline void pick_pair(uint64_t key, uint64_t c, int64_t n_leaves, int64_t* a, int64_t* b) noexcept nogil:
    cdef double u0 = sm_uniform(key, c)
    cdef double u1 = sm_uniform(key, c + 1)
    if n_leaves == 1:
        a[0] = 0
        b[0] = 0
        return
    a[0] = <int64_t>(u0 * n_leaves)
    b[0] = <int64_t>(u1 * (n_leaves - 1))
    if b[0] >= a[0]:
        b[0] += 1


def simulate_leaves(uint64_t key, int64_t s, int64_t rounds, int64_t inject_round, bint stop_on_cover,
                    int64_t[::1] leaf_sizes, int64_t[::1] referenced, int64_t[::1] psi):
    cdef int64_t cap = max(64, 8 * s + 8)
    cov_buf = np.zeros(cap, dtype=np.uint8)
    nxt_buf = np.zeros(cap, dtype=np.uint8)
    hit_buf = np.zeros(cap, dtype=np.uint8)
    new_buf = np.zeros(s, dtype=np.uint8)
    cdef uint8_t[::1] cov = cov_buf
    cdef uint8_t[::1] nxt = nxt_buf
    cdef uint8_t[::1] hit = hit_buf
    cdef uint8_t[::1] new = new_buf
    cdef uint8_t[::1] tmp
    cdef int64_t n_leaves = 1, r = 0, k, a = 0, b = 0, x, w, covered
    cdef int64_t cover_round = -1
    leaf_sizes[0] = 1
    referenced[0] = 0
    psi[0] = 0
    for r in range(1, rounds + 1):
        if n_leaves + s > cap:
            cap = 2 * (n_leaves + s)
            grown = np.zeros(cap, dtype=np.uint8)
            grown[:n_leaves] = cov_buf[:n_leaves]
            cov_buf = grown
            nxt_buf = np.zeros(cap, dtype=np.uint8)
            hit_buf = np.zeros(cap, dtype=np.uint8)
            cov = cov_buf
            nxt = nxt_buf
            hit = hit_buf
        with nogil:
            for k in range(n_leaves):
                hit[k] = 0
            for k in range(s):
                pick_pair(key, <uint64_t>(2 * ((r - 1) * s + k)), n_leaves, &a, &b)
                hit[a] = 1
                hit[b] = 1
                new[k] = cov[a] | cov[b]
            if r == inject_round:
                new[0] = 1
            x = 0
            w = 0
            covered = 0
            for k in range(n_leaves):
                if hit[k]:
                    x += 1
                else:
                    nxt[w] = cov[k]
                    covered += cov[k]
                    w += 1
            for k in range(s):
                nxt[w] = new[k]
                covered += new[k]
                w += 1
            n_leaves = w
        tmp = cov
        cov = nxt
        nxt = tmp
        cov_buf, nxt_buf = nxt_buf, cov_buf
        referenced[r] = x
        leaf_sizes[r] = n_leaves
        if inject_round > 0 and r >= inject_round:
            psi[r] = covered
        else:
            psi[r] = 0
        if cover_round < 0 and inject_round > 0 and r > inject_round and covered == n_leaves:
            cover_round = r
            if stop_on_cover:
                break
    return r, cover_round


def sample_referenced(uint64_t key, int64_t n_leaves, int64_t s, int64_t[::1] out):
    cdef int64_t draws = out.shape[0], d, k, a = 0, b = 0, x
    stamp_buf = np.full(n_leaves, -1, dtype=np.int64)
    cdef int64_t[::1] stamp = stamp_buf
    with nogil:
        for d in range(draws):
            x = 0
            for k in range(s):
                pick_pair(key, <uint64_t>(2 * (d * s + k)), n_leaves, &a, &b)
                if stamp[a] != d:
                    stamp[a] = d
                    x += 1
                if stamp[b] != d:
                    stamp[b] = d
                    x += 1
            out[d] = x


def walk_exits(uint64_t key, int64_t horizon, double p, int64_t[::1] out):
    cdef int64_t trials = out.shape[0], t, i, pos
    cdef uint64_t kt
    with nogil:
        for t in range(trials):
            kt = sm_derive(key, <uint64_t>t)
            pos = 0
            out[t] = horizon + 1
            for i in range(horizon):
                if sm_uniform(kt, <uint64_t>i) < p:
                    pos += 1
                else:
                    pos -= 1
                    if pos < 0:
                        out[t] = i + 1
                        break
