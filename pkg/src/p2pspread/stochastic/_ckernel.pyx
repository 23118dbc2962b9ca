# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled round kernel; draw-for-draw identical to ``_pykernel``."""
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, realloc, free

cdef extern from *:
    int __builtin_popcountll(unsigned long long)
    int __builtin_ctzll(unsigned long long)

DEF BLOCK = 4096
DEF MAX_REJECTIONS = 32
DEF CACHE_SLOTS = 64


cdef class _Draws:
    cdef object gen
    cdef double[::1] buf
    cdef Py_ssize_t pos

    def __init__(self, gen):
        self.gen = gen
        self.buf = gen.random(BLOCK)
        self.pos = 0

    cdef inline Py_ssize_t index(self, Py_ssize_t k):
        if self.pos == BLOCK:
            self.buf = self.gen.random(BLOCK)
            self.pos = 0
        cdef double u = self.buf[self.pos]
        self.pos += 1
        return <Py_ssize_t>(u * k)


cdef inline int nth_bit(uint64_t mask, Py_ssize_t idx):
    while idx:
        mask &= mask - 1
        idx -= 1
    return __builtin_ctzll(mask)


cdef struct NeedCache:
    Py_ssize_t used
    uint64_t mask[CACHE_SLOTS]
    Py_ssize_t off[CACHE_SLOTS]
    Py_ssize_t cnt[CACHE_SLOTS]
    Py_ssize_t* arena
    Py_ssize_t fill
    Py_ssize_t cap


cdef Py_ssize_t fallback(uint64_t* have, uint64_t need, Py_ssize_t* holders, Py_ssize_t nh,
                         _Draws draws, NeedCache* cache) except -2:
    # uniform over holders with a needed part; a peer never holds its own needs
    cdef Py_ssize_t s, k, j, c, nuse = 0
    cdef Py_ssize_t* grown
    for s in range(cache.used):
        if cache.mask[s] == need:
            return cache.arena[cache.off[s] + draws.index(cache.cnt[s])]
    if cache.used < CACHE_SLOTS:
        if cache.fill + nh > cache.cap:
            grown = <Py_ssize_t*>realloc(cache.arena, 2 * (cache.cap + nh) * sizeof(Py_ssize_t))
            if grown == NULL:
                raise MemoryError()
            cache.arena = grown
            cache.cap = 2 * (cache.cap + nh)
        s = cache.used
        cache.used += 1
        cache.mask[s] = need
        cache.off[s] = cache.fill
        for k in range(nh):
            j = holders[k]
            if have[j] & need:
                cache.arena[cache.fill] = j
                cache.fill += 1
        cache.cnt[s] = cache.fill - cache.off[s]
        return cache.arena[cache.off[s] + draws.index(cache.cnt[s])]
    for k in range(nh):
        if have[holders[k]] & need:
            nuse += 1
    c = draws.index(nuse)
    for k in range(nh):
        j = holders[k]
        if have[j] & need:
            if c == 0:
                return j
            c -= 1
    return -1


cdef Py_ssize_t step(uint64_t* have, Py_ssize_t n, uint64_t full, bint use_list,
                     _Draws draws, Py_ssize_t* target, Py_ssize_t* holders,
                     Py_ssize_t* cnt, Py_ssize_t* start, Py_ssize_t* order,
                     Py_ssize_t* win, int* part, NeedCache* cache) except -1:
    cdef Py_ssize_t p, j, k, u, t, nh = 0, moved = 0, c
    cdef uint64_t need, useful
    cache.used = 0
    cache.fill = 0
    if use_list:
        for j in range(n + 1):
            if have[j]:
                holders[nh] = j
                nh += 1
    for u in range(n + 1):
        cnt[u] = 0
    for p in range(1, n + 1):
        target[p] = -1
        need = full & ~have[p]
        if not need:
            continue
        if use_list:
            t = -1
            for k in range(MAX_REJECTIONS):
                j = holders[draws.index(nh)]
                if j != p and (have[j] & need):
                    t = j
                    break
            if t < 0:
                t = fallback(have, need, holders, nh, draws, cache)
        else:
            k = draws.index(n)
            if k == 0:
                t = 0
            elif k < p:
                t = k
            else:
                t = k + 1
        if have[t] & need:
            target[p] = t
            cnt[t] += 1
    start[0] = 0
    for u in range(n + 1):
        start[u + 1] = start[u] + cnt[u]
        cnt[u] = 0
    for p in range(1, n + 1):
        t = target[p]
        if t >= 0:
            order[start[t] + cnt[t]] = p
            cnt[t] += 1
    for u in range(n + 1):
        c = cnt[u]
        if c == 0:
            continue
        if c > 1:
            p = order[start[u] + draws.index(c)]
        else:
            p = order[start[u]]
        useful = have[u] & ~have[p]
        c = __builtin_popcountll(useful)
        win[moved] = p
        part[moved] = nth_bit(useful, draws.index(c) if c > 1 else 0)
        moved += 1
    for k in range(moved):
        have[win[k]] |= (<uint64_t>1) << part[k]
    return moved


def run(Py_ssize_t n, int m, bint use_list, gen):
    """Rounds until every peer holds all ``m`` parts."""
    if m < 1 or m > 64:
        raise ValueError("1 <= M <= 64 required")
    cdef uint64_t full = (<uint64_t>-1) if m == 64 else (((<uint64_t>1) << m) - 1)
    cdef Py_ssize_t sz = n + 2
    cdef uint64_t* have = <uint64_t*>malloc(sz * sizeof(uint64_t))
    cdef Py_ssize_t* buf = <Py_ssize_t*>malloc(6 * sz * sizeof(Py_ssize_t))
    cdef int* part = <int*>malloc(sz * sizeof(int))
    if have == NULL or buf == NULL or part == NULL:
        free(have); free(buf); free(part)
        raise MemoryError()
    cdef Py_ssize_t i, rounds = 0, remaining = n, moved
    cdef _Draws draws = _Draws(gen)
    cdef NeedCache cache
    cache.arena = NULL
    cache.cap = 0
    try:
        have[0] = full
        for i in range(1, n + 1):
            have[i] = 0
        while remaining:
            moved = step(have, n, full, use_list, draws, buf, buf + sz, buf + 2 * sz,
                         buf + 3 * sz, buf + 4 * sz, buf + 5 * sz, part, &cache)
            if use_list and moved == 0:
                raise AssertionError("stalled round under List")
            rounds += 1
            remaining = 0
            for i in range(1, n + 1):
                if have[i] != full:
                    remaining += 1
        return rounds
    finally:
        free(have)
        free(buf)
        free(part)
        free(cache.arena)
