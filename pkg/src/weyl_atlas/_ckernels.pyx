# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched Sturm root counting and batched Pfaffians.

Operation order matches ``_pykernels`` so both backends give identical root
counts; Pfaffians agree to rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

cdef enum:
    MAXC = 16   # max coefficients (degree 15)
    MAXSEQ = 17  # max Sturm chain length


cdef int _normalize(double* c, int n) noexcept nogil:
    cdef int i
    cdef double s = 0.0, a
    while n > 0 and c[n - 1] == 0.0:
        n -= 1
    if n == 0:
        return 0
    for i in range(n):
        a = fabs(c[i])
        if a > s:
            s = a
    for i in range(n):
        c[i] = c[i] / s
    return n


cdef int _polyrem(const double* a, int na, const double* b, int nb,
                  double tol, double* r) noexcept nogil:
    cdef int i, k, db = nb - 1
    cdef double q, lb = b[db]
    for i in range(na):
        r[i] = a[i]
    k = na - 1 - db
    while k >= 0:
        q = r[k + db] / lb
        for i in range(db + 1):
            r[k + i] -= q * b[i]
        r[k + db] = 0.0
        k -= 1
    for i in range(db):
        if fabs(r[i]) <= tol:
            r[i] = 0.0
    return _normalize(r, db)


cdef int _count_one(const double* c, int nc, double tol) noexcept nogil:
    cdef double seq[MAXSEQ][MAXC]
    cdef int lens[MAXSEQ]
    cdef int i, n, ns, last, s, vpos, vneg
    cdef double v

    for i in range(nc):
        seq[0][i] = c[i]
    n = _normalize(seq[0], nc)
    while n > 0 and fabs(seq[0][n - 1]) < tol:
        n -= 1
    n = _normalize(seq[0], n)
    if n == 0:
        return -1
    if n == 1:
        return 0
    lens[0] = n
    for i in range(1, n):
        seq[1][i - 1] = i * seq[0][i]
    lens[1] = _normalize(seq[1], n - 1)
    ns = 2
    while lens[ns - 1] > 1 and ns < MAXSEQ:
        n = _polyrem(seq[ns - 2], lens[ns - 2], seq[ns - 1], lens[ns - 1], tol, seq[ns])
        if n == 0:
            break
        for i in range(n):
            seq[ns][i] = -seq[ns][i]
        lens[ns] = n
        ns += 1

    vpos = 0
    last = 0
    for i in range(ns):
        v = seq[i][lens[i] - 1]
        if v == 0.0:
            continue
        s = 1 if v > 0.0 else -1
        if last != 0 and s != last:
            vpos += 1
        last = s
    vneg = 0
    last = 0
    for i in range(ns):
        v = seq[i][lens[i] - 1]
        if (lens[i] - 1) % 2 == 1:
            v = -v
        if v == 0.0:
            continue
        s = 1 if v > 0.0 else -1
        if last != 0 and s != last:
            vneg += 1
        last = s
    return vneg - vpos


def count_real_roots_batch(coeffs, double tol):
    """Distinct real root counts for each row of ascending coefficients (-1 for zero rows)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t B = c.shape[0], b
    cdef int nc = <int>c.shape[1]
    if nc > MAXC:
        raise ValueError("unsupported degree")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(B, dtype=np.int64)
    cdef double[:, ::1] cv = c
    cdef cnp.int64_t[::1] ov = out
    with nogil:
        for b in range(B):
            ov[b] = _count_one(&cv[b, 0], nc, tol)
    return out


cdef double _pfaffian_one(double* A, int N, double* v, double* w) noexcept nogil:
    """Householder tridiagonalization in place on a row-major N x N block."""
    cdef int i, j, k, m
    cdef double sigma, norm_x, alpha, x0, vn, pf = 1.0, t
    for i in range(N - 2):
        m = N - i - 1
        sigma = 0.0
        for j in range(1, m):
            t = A[(i + 1 + j) * N + i]
            sigma += t * t
        x0 = A[(i + 1) * N + i]
        if sigma > 0.0:
            norm_x = sqrt(x0 * x0 + sigma)
            v[0] = x0
            for j in range(1, m):
                v[j] = A[(i + 1 + j) * N + i]
            if x0 <= 0.0:
                v[0] = x0 - norm_x
                alpha = norm_x
            else:
                v[0] = x0 + norm_x
                alpha = -norm_x
            vn = 0.0
            for j in range(m):
                vn += v[j] * v[j]
            vn = sqrt(vn)
            for j in range(m):
                v[j] = v[j] / vn
            for j in range(m):
                t = 0.0
                for k in range(m):
                    t += A[(i + 1 + j) * N + (i + 1 + k)] * v[k]
                w[j] = 2.0 * t
            for j in range(m):
                for k in range(m):
                    A[(i + 1 + j) * N + (i + 1 + k)] += v[j] * w[k] - w[j] * v[k]
            pf = -pf
        else:
            alpha = x0
        A[(i + 1) * N + i] = alpha
        A[i * N + i + 1] = -alpha
        for j in range(i + 2, N):
            A[j * N + i] = 0.0
            A[i * N + j] = 0.0
        if i % 2 == 0:
            pf = pf * (-alpha)
    return pf * A[(N - 2) * N + N - 1]


def pfaffian_batch(A):
    """Pfaffians of a stack (B, N, N) of real antisymmetric matrices."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] a = np.array(A, dtype=np.float64, order="C", copy=True, ndmin=3)
    cdef Py_ssize_t B = a.shape[0], b
    cdef int N = <int>a.shape[1]
    if N % 2:
        raise ValueError("Pfaffian of odd-dimensional matrix")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(B, dtype=np.float64)
    if N == 0:
        out[:] = 1.0
        return out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.empty(2 * N + 2, dtype=np.float64)
    cdef double[:, :, ::1] av = a
    cdef double[::1] ov = out
    cdef double[::1] wv = work
    with nogil:
        for b in range(B):
            ov[b] = _pfaffian_one(&av[b, 0, 0], N, &wv[0], &wv[N + 1])
    return out
