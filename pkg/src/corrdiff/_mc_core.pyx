# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled random-walk kernels; same counter-based recipe as ``_mc_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, log1p, expm1, M_PI
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

NAME = "cython"

cdef uint64_t GOLD = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM = 0xD1B54A32D192ED03ULL
cdef uint64_t C1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t C2 = 0x94D049BB133111EBULL
cdef double TWO53 = 1.1102230246251565e-16
cdef double SQRT2 = 1.4142135623730951


cdef inline uint64_t mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * C1
    z = (z ^ (z >> 27)) * C2
    return z ^ (z >> 31)


cdef inline uint64_t path_key(uint64_t seed, uint64_t stream, uint64_t i) nogil:
    cdef uint64_t base = mix(seed ^ (stream * STREAM))
    return mix(base + (i + 1) * GOLD)


cdef inline double unif(uint64_t key, int64_t* ctr) nogil:
    cdef uint64_t z = mix(key + (<uint64_t>ctr[0] + 1) * GOLD)
    ctr[0] += 1
    return (<double>(z >> 11) + 0.5) * TWO53


cdef double draw(int code, double* p, uint64_t key, int64_t* ctr) nogil:
    cdef double u1, u2, u3, x, v, d, c, acc, e
    cdef int j, kint
    if code == 0:
        u1 = unif(key, ctr)
        u2 = unif(key, ctr)
        return p[0] + sqrt(-2.0 * log(u1)) * cos(2.0 * M_PI * u2)
    elif code == 1:
        kint = <int>p[0]
        if p[0] == kint and kint <= 16:
            acc = 0.0
            for j in range(kint):
                acc -= log(unif(key, ctr))
        else:
            d = p[0] - 1.0 / 3.0
            c = 1.0 / sqrt(9.0 * d)
            while True:
                u1 = unif(key, ctr)
                u2 = unif(key, ctr)
                u3 = unif(key, ctr)
                x = sqrt(-2.0 * log(u1)) * cos(2.0 * M_PI * u2)
                v = (1.0 + c * x) * (1.0 + c * x) * (1.0 + c * x)
                if v > 0 and log(u3) < 0.5 * x * x + d - d * v + d * log(v):
                    acc = d * v
                    break
        return acc / p[1] / p[2] - p[2]
    elif code == 2:
        u1 = unif(key, ctr)
        u2 = unif(key, ctr)
        e = -log(u2)
        if u1 < (SQRT2 + p[0]) / (2.0 * SQRT2):
            return e / (SQRT2 - p[0])
        return -e / (SQRT2 + p[0])
    else:
        u1 = unif(key, ctr)
        if p[1] == 0.0:
            return -p[0] + 2.0 * p[0] * u1
        return -p[0] + log1p(u1 * expm1(2.0 * p[0] * p[1])) / p[1]


def sample(int code, double[::1] params, Py_ssize_t n, uint64_t seed, uint64_t stream):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef Py_ssize_t i
    cdef int64_t ctr
    cdef double* p = &params[0]
    with nogil:
        for i in range(n):
            ctr = 0
            out[i] = draw(code, p, path_key(seed, stream, i), &ctr)
    return out


def first_passage(int code, double[::1] params, double level, Py_ssize_t n,
                  uint64_t seed, uint64_t stream, int64_t max_steps):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s_out = np.empty(n)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] steps = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i
    cdef int64_t t, ctr
    cdef double s
    cdef uint64_t key
    cdef double* p = &params[0]
    with nogil:
        for i in range(n):
            key = path_key(seed, stream, i)
            ctr = 0
            s = 0.0
            steps[i] = -1
            for t in range(1, max_steps + 1):
                s += draw(code, p, key, &ctr)
                if s > level:
                    steps[i] = t
                    break
            s_out[i] = s
    return s_out, steps


def lindley_cycles(int code, double[::1] params, Py_ssize_t n,
                   uint64_t seed, uint64_t stream, int64_t max_steps):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] total = np.empty(n)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] length = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i
    cdef int64_t t, ctr
    cdef double w, acc
    cdef uint64_t key
    cdef double* p = &params[0]
    with nogil:
        for i in range(n):
            key = path_key(seed, stream, i)
            ctr = 0
            w = 0.0
            acc = 0.0
            length[i] = -1
            for t in range(1, max_steps + 1):
                w = w + draw(code, p, key, &ctr)
                if w <= 0.0:
                    length[i] = t
                    break
                acc += w
            total[i] = acc
    return total, length
