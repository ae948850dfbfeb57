# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled successive-cancellation kernel (batch over frames, nogil)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log1p, exp, expm1, isinf, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline double _f_exact(double a, double b) noexcept nogil:
    cdef double A = fabs(a)
    cdef double B = fabs(b)
    cdef double m = A if A < B else B
    cdef double d = fabs(A - B)
    cdef double s = -1.0 if (a < 0) != (b < 0) else 1.0
    cdef double xa, xb, e1, e2
    if isinf(m):
        return s * INFINITY
    if m < 1.0:
        # small magnitudes: the min/correction form cancels catastrophically;
        # 2 atanh(tanh(A/2) tanh(B/2)) = log1p(xa xb / (2 + xa + xb)), x = expm1(-|.|)
        xa = expm1(-A)
        xb = expm1(-B)
        return s * log1p(xa * xb / (2.0 + xa + xb))
    # m + log1p(e1) - log1p(e2) with e1 = exp(-A-B) = e2 exp(-2m), e2 = exp(-d)
    if d > 37.0:
        return s * m
    e2 = exp(-d)
    if m > 18.5:
        return s * (m - log1p(e2))
    e1 = e2 * exp(-2.0 * m)
    return s * (m + log1p((e1 - e2) / (1.0 + e2)))


cdef inline double _f_minsum(double a, double b) noexcept nogil:
    cdef double m = fabs(a) if fabs(a) < fabs(b) else fabs(b)
    return -m if (a < 0) != (b < 0) else m


cdef void _decode(const double* alpha, int size, int u_start,
                  const unsigned char* frozen, const int* nfrozen, unsigned char* u_out,
                  unsigned char* beta_out, double* a_scr, unsigned char* b_scr,
                  bint min_sum) noexcept nogil:
    cdef int i, h
    cdef unsigned char bit
    cdef double v
    if nfrozen[u_start + size] - nfrozen[u_start] == size:
        # every leaf below is frozen: all decisions are zero whatever the LLRs
        for i in range(size):
            u_out[u_start + i] = 0
            beta_out[i] = 0
        return
    if size == 1:
        v = alpha[0]
        bit = 0 if (frozen[u_start] or not (v < 0)) else 1
        u_out[u_start] = bit
        beta_out[0] = bit
        return
    h = size >> 1
    cdef double* child = a_scr
    cdef unsigned char* beta_left = b_scr
    if min_sum:
        for i in range(h):
            child[i] = _f_minsum(alpha[i], alpha[i + h])
    else:
        for i in range(h):
            child[i] = _f_exact(alpha[i], alpha[i + h])
    _decode(child, h, u_start, frozen, nfrozen, u_out, beta_left, a_scr + h, b_scr + h, min_sum)
    for i in range(h):
        if beta_left[i]:
            child[i] = alpha[i + h] - alpha[i]
        else:
            child[i] = alpha[i + h] + alpha[i]
    _decode(child, h, u_start + h, frozen, nfrozen, u_out, beta_out + h, a_scr + h, b_scr + h, min_sum)
    for i in range(h):
        beta_out[i] = beta_left[i] ^ beta_out[i + h]


def f_exact_scalar(double a, double b):
    return _f_exact(a, b)


def sc_decode_batch(double[:, ::1] llr, const unsigned char[::1] frozen, bint min_sum=False):
    """SC-decode every row of ``llr``; returns ``(u_hat, x_hat)`` as uint8 arrays."""
    cdef Py_ssize_t B = llr.shape[0]
    cdef int N = <int>llr.shape[1]
    if frozen.shape[0] != N:
        raise ValueError("frozen mask length mismatch")
    if N & (N - 1):
        raise ValueError("block length must be a power of two")
    u_arr = np.zeros((B, N), dtype=np.uint8)
    x_arr = np.zeros((B, N), dtype=np.uint8)
    cdef unsigned char[:, ::1] u = u_arr
    cdef unsigned char[:, ::1] x = x_arr
    cdef double* a_scr
    cdef unsigned char* b_scr
    cdef Py_ssize_t r
    cdef int i
    nf_arr = np.zeros(N + 1, dtype=np.intc)
    cdef int[::1] nf = nf_arr
    for i in range(N):
        nf[i + 1] = nf[i] + (frozen[i] != 0)
    with nogil:
        a_scr = <double*>malloc(sizeof(double) * (N + 1))
        b_scr = <unsigned char*>malloc(N + 1)
        if a_scr != NULL and b_scr != NULL:
            for r in range(B):
                _decode(&llr[r, 0], N, 0, &frozen[0], &nf[0], &u[r, 0], &x[r, 0], a_scr, b_scr, min_sum)
    if a_scr == NULL or b_scr == NULL:
        free(a_scr)
        free(b_scr)
        raise MemoryError()
    free(a_scr)
    free(b_scr)
    return u_arr, x_arr
