# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Contracts match ``coreaudit._pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()

BACKEND = "cython"


def scan_committees(U, thresh, size_lo, size_hi, int h, long long start, long long stop):
    cdef int64_t[:, ::1] Uv = np.ascontiguousarray(U, dtype=np.int64)
    cdef int64_t[::1] th = np.ascontiguousarray(thresh, dtype=np.int64)
    cdef double[::1] slo = np.ascontiguousarray(size_lo, dtype=np.float64)
    cdef double[::1] shi = np.ascontiguousarray(size_hi, dtype=np.float64)
    cdef Py_ssize_t n = Uv.shape[0], m = Uv.shape[1]
    # column-major copy so a flip touches contiguous memory
    cdef int64_t[:, ::1] Ut = np.ascontiguousarray(np.asarray(Uv).T)
    cdef int64_t[::1] score = np.zeros(n, dtype=np.int64)
    cdef long long lo_mask = (1LL << h) - 1
    cdef long long g, mask, bit, best_mask = -1
    cdef long long best_count = 0, count = 0
    cdef double best_size = 0.0, size, lhs, rhs
    cdef Py_ssize_t i, j
    cdef int64_t old, new, t
    if start >= stop:
        return -1, 0, 0.0
    mask = start ^ (start >> 1)
    for i in range(n):
        t = 0
        for j in range(m):
            if (mask >> j) & 1:
                t += Uv[i, j]
        score[i] = t
        if t >= th[i]:
            count += 1
    g = start
    while True:
        if count > 0 and mask != 0:
            size = slo[mask & lo_mask] + shi[mask >> h]
            if best_mask < 0:
                best_mask = mask; best_count = count; best_size = size
            else:
                lhs = size * best_count
                rhs = best_size * count
                if lhs < rhs or (lhs == rhs and mask < best_mask):
                    best_mask = mask; best_count = count; best_size = size
        g += 1
        if g >= stop:
            break
        # bit that flips between gray(g-1) and gray(g)
        j = 0
        bit = g
        while not (bit & 1):
            bit >>= 1
            j += 1
        mask ^= (1LL << j)
        if (mask >> j) & 1:
            for i in range(n):
                if Ut[j, i] != 0:
                    old = score[i]
                    new = old + Ut[j, i]
                    score[i] = new
                    if old < th[i] and new >= th[i]:
                        count += 1
                    elif old >= th[i] and new < th[i]:
                        count -= 1
        else:
            for i in range(n):
                if Ut[j, i] != 0:
                    old = score[i]
                    new = old - Ut[j, i]
                    score[i] = new
                    if old < th[i] and new >= th[i]:
                        count += 1
                    elif old >= th[i] and new < th[i]:
                        count -= 1
    return best_mask, best_count, best_size


cdef inline bint _better(int64_t p1, int64_t s1, int64_t r1, int64_t p2, int64_t s2, int64_t r2) noexcept nogil:
    # lexicographic max on (payoff, -size, revmask)
    if p1 != p2:
        return p1 > p2
    if s1 != s2:
        return s1 < s2
    return r1 > r2


def kc_separate(util, yq, zq, long long cap):
    cdef int64_t[::1] u = np.ascontiguousarray(util, dtype=np.int64)
    cdef int64_t[::1] y = np.ascontiguousarray(yq, dtype=np.int64)
    cdef int64_t z = zq
    cdef Py_ssize_t L = u.shape[0]
    if L > 62:
        from . import _pykernels
        return _pykernels.kc_separate(util, yq, zq, cap)
    cdef int64_t[::1] pay = np.empty(cap + 1, dtype=np.int64)
    cdef int64_t[::1] siz = np.empty(cap + 1, dtype=np.int64)
    cdef int64_t[::1] rev = np.empty(cap + 1, dtype=np.int64)
    cdef char[::1] reach = np.empty(cap + 1, dtype=np.int8)
    cdef long long D, target, t, uj
    cdef Py_ssize_t j
    cdef int64_t w, total, viol, bit
    cdef int64_t np_, ns, nr
    cdef bint have = False
    cdef int64_t b_viol = 0, b_size = 0, b_rev = 0
    cdef long long b_D = 0
    for D in range(1, cap + 1):
        target = cap - D
        for t in range(target + 1):
            reach[t] = 0
        reach[0] = 1
        pay[0] = 0; siz[0] = 0; rev[0] = 0
        for j in range(L):
            uj = u[j]
            if uj > target:
                continue
            w = (uj if uj < D else D) * y[j]
            bit = (<int64_t>1) << (L - 1 - j)
            t = target
            while t >= uj:
                if reach[t - uj]:
                    np_ = pay[t - uj] + w
                    ns = siz[t - uj] + 1
                    nr = rev[t - uj] + bit
                    if not reach[t] or _better(np_, ns, nr, pay[t], siz[t], rev[t]):
                        reach[t] = 1
                        pay[t] = np_; siz[t] = ns; rev[t] = nr
                t -= 1
        if not reach[target]:
            continue
        total = 0
        for j in range(L):
            total += (u[j] if u[j] < D else D) * y[j]
        viol = z * D - (total - pay[target])
        if not have or _better(viol, siz[target], rev[target], b_viol, b_size, b_rev):
            have = True
            b_viol = viol; b_size = siz[target]; b_rev = rev[target]; b_D = D
    cdef long long mask = 0
    for j in range(L):
        if (b_rev >> (L - 1 - j)) & 1:
            mask |= (1LL << j)
    return int(b_viol), int(mask), int(b_D)
