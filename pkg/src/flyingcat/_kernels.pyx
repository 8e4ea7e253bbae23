# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, exp, fabs, M_PI
from libc.stdint cimport uint64_t, uint8_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t seed, uint64_t stream, int64_t check) noexcept nogil:
    cdef uint64_t k = mix(seed)
    k = mix(k + stream * GOLDEN)
    return mix(k + <uint64_t>(check + 1) * GOLDEN)


cdef inline double draw(uint64_t key, int64_t j) noexcept nogil:
    return <double>(mix(key + <uint64_t>(j + 1) * GOLDEN) >> 11) * (1.0 / 9007199254740992.0)


cdef inline double gauss(double u1, double u2) noexcept nogil:
    return sqrt(-2.0 * log(1.0 - u1)) * cos(2.0 * M_PI * u2)


cdef inline int parity(uint64_t v) noexcept nogil:
    cdef int p = 0
    while v:
        p ^= <int>(v & 1)
        v >>= 1
    return p


cdef inline double complex ipow(int k) noexcept nogil:
    k = k & 3
    if k == 0:
        return 1.0
    elif k == 1:
        return 1j
    elif k == 2:
        return -1.0
    return -1j


cdef void apply_pauli(double complex* src, double complex* dst, Py_ssize_t d,
                      uint64_t xm, uint64_t zm) noexcept nogil:
    cdef Py_ssize_t b
    cdef double complex ph
    cdef int ny = 0
    cdef uint64_t t = xm & zm
    while t:
        ny += <int>(t & 1)
        t >>= 1
    ph = ipow(ny)
    for b in range(d):
        if parity(<uint64_t>b & zm):
            dst[<uint64_t>b ^ xm] = -ph * src[b]
        else:
            dst[<uint64_t>b ^ xm] = ph * src[b]


def uniforms(uint64_t seed, streams, Py_ssize_t ndraw, int64_t check=0):
    cdef cnp.uint64_t[:] s = np.ascontiguousarray(streams, dtype=np.uint64)
    cdef Py_ssize_t m = s.shape[0], i, j
    out = np.empty((m, ndraw), dtype=np.float64)
    cdef double[:, :] o = out
    cdef uint64_t key
    with nogil:
        for i in range(m):
            key = stream_key(seed, s[i], check)
            for j in range(ndraw):
                o[i, j] = draw(key, j)
    return out


def sample_checks(states, uint64_t seed, streams, int64_t check, seg_x, seg_z,
                  probs, uint64_t chk_x, uint64_t chk_z, double abar):
    cdef double complex[:, :] psi = np.array(states, dtype=np.complex128, copy=True, order="C")
    cdef cnp.uint64_t[:] s = np.ascontiguousarray(streams, dtype=np.uint64)
    cdef cnp.uint64_t[:] sx = np.ascontiguousarray(seg_x, dtype=np.uint64)
    cdef cnp.uint64_t[:] sz = np.ascontiguousarray(seg_z, dtype=np.uint64)
    cdef double[:] pr = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t m = psi.shape[0], d = psi.shape[1], n = pr.shape[0]
    fired_arr = np.zeros((m, n), dtype=np.uint8)
    x_arr = np.empty(m, dtype=np.float64)
    out_arr = np.empty((m, d), dtype=np.complex128)
    cdef uint8_t[:, :] fired = fired_arr
    cdef double[:] xs = x_arr
    cdef double complex[:, :] out = out_arr
    cdef double complex[:] tmp = np.empty(d, dtype=np.complex128)
    cdef double complex[:] pst = np.empty(d, dtype=np.complex128)
    cdef Py_ssize_t i, k, b
    cdef uint64_t key
    cdef double a = sqrt(2.0) * abar
    cdef double e, wplus, sigma, x, r, gp, gm, norm, keep
    cdef double complex acc

    with nogil:
        for i in range(m):
            key = stream_key(seed, s[i], check)
            for k in range(n):
                if draw(key, k) < pr[k]:
                    fired[i, k] = 1
                    apply_pauli(&psi[i, 0], &tmp[0], d, sx[k], sz[k])
                    for b in range(d):
                        psi[i, b] = tmp[b]
            apply_pauli(&psi[i, 0], &pst[0], d, chk_x, chk_z)
            acc = 0
            for b in range(d):
                acc = acc + psi[i, b].conjugate() * pst[b]
            e = acc.real
            wplus = 0.5 * (1.0 + e)
            if wplus < 0.0:
                wplus = 0.0
            elif wplus > 1.0:
                wplus = 1.0
            sigma = 1.0 if draw(key, n) < wplus else -1.0
            x = sigma * a + gauss(draw(key, n + 1), draw(key, n + 2)) / sqrt(2.0)
            xs[i] = x
            r = exp(-2.0 * a * fabs(x))
            if x >= 0:
                gp = 1.0
                gm = r
            else:
                gp = r
                gm = 1.0
            norm = 0.0
            for b in range(d):
                out[i, b] = 0.5 * (gp + gm) * psi[i, b] + 0.5 * (gp - gm) * pst[b]
                norm += out[i, b].real * out[i, b].real + out[i, b].imag * out[i, b].imag
            norm = sqrt(norm)
            if norm < 1e-300:
                keep = 1.0 if wplus > 0.5 else -1.0
                norm = 0.0
                for b in range(d):
                    out[i, b] = 0.5 * (psi[i, b] + keep * pst[b])
                    norm += out[i, b].real * out[i, b].real + out[i, b].imag * out[i, b].imag
                norm = sqrt(norm)
            for b in range(d):
                out[i, b] = out[i, b] / norm
    return fired_arr, x_arr, out_arr


def repeated_decisions(uint64_t seed, streams, amps, bint soft):
    cdef cnp.uint64_t[:] s = np.ascontiguousarray(streams, dtype=np.uint64)
    cdef double[:] am = np.ascontiguousarray(amps, dtype=np.float64)
    cdef Py_ssize_t m = s.shape[0], nrep = am.shape[0], i, k
    err_arr = np.empty(m, dtype=np.uint8)
    cdef uint8_t[:] err = err_arr
    cdef uint64_t key
    cdef double x, llr
    cdef Py_ssize_t votes
    with nogil:
        for i in range(m):
            key = stream_key(seed, s[i], 0)
            llr = 0.0
            votes = 0
            for k in range(nrep):
                x = am[k] + gauss(draw(key, 2 * k), draw(key, 2 * k + 1)) / sqrt(2.0)
                llr += x * am[k]
                if x >= 0.0:
                    votes += 1
            if soft:
                err[i] = 0 if llr >= 0.0 else 1
            else:
                err[i] = 0 if 2 * votes > nrep else 1
    return err_arr
