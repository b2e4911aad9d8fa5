# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled GLM kernels: fused log-likelihood, score and negative Hessian.

Same contract as ``_kernels_py``. One pass over the rows computes the
linear predictor, the log-likelihood, the score and the curvature weights;
the curvature ``D' W D`` is then a single BLAS ``dsyrk`` call whose
triangle is mirrored, so the result is exactly symmetric.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt
from scipy.linalg.cython_blas cimport dsyrk

cnp.import_array()

cdef double HALF_LOG_2PI = 0.91893853320467274178


cdef inline double log1pexp(double eta) noexcept nogil:
    if eta > 0:
        return eta + log1p(exp(-eta))
    return log1p(exp(eta))


cdef inline double expit(double eta) noexcept nogil:
    cdef double e
    if eta >= 0:
        return 1.0 / (1.0 + exp(-eta))
    e = exp(eta)
    return e / (1.0 + e)


def loglik(int kind, const double[::1] y, const double[:, ::1] D,
           const double[::1] theta, double sigma2):
    cdef Py_ssize_t n = D.shape[0], q = D.shape[1], i, j
    cdef double eta, r, acc = 0.0, logs2
    if kind == 1:
        logs2 = theta[q]
    elif kind == 0:
        logs2 = log(sigma2)
    else:
        logs2 = 0.0
    with nogil:
        for i in range(n):
            eta = 0.0
            for j in range(q):
                eta = eta + D[i, j] * theta[j]
            if kind == 2:
                acc = acc + y[i] * eta - log1pexp(eta)
            else:
                r = y[i] - eta
                acc = acc + r * r
    if kind == 2:
        return acc
    return -n * (HALF_LOG_2PI + 0.5 * logs2) - 0.5 * acc * exp(-logs2)


cdef void _gram(const double[:, ::1] A, double[:, ::1] C) noexcept nogil:
    """C = A' A for row-major A (n x q); upper and lower triangles both set."""
    cdef int n = <int>A.shape[0], q = <int>A.shape[1], i, j
    cdef double one = 1.0, zero = 0.0
    cdef char uplo = b'U', trans = b'N'
    if n == 0 or q == 0:
        return
    # Row-major A is column-major A' (q x n); dsyrk forms A' A'^T.
    dsyrk(&uplo, &trans, &q, &n, &one, <double*>&A[0, 0], &q, &zero, &C[0, 0], &q)
    # Column-major upper triangle is the row-major lower one; mirror it.
    for i in range(q):
        for j in range(i + 1, q):
            C[i, j] = C[j, i]


def loglik_grad_hess(int kind, const double[::1] y, const double[:, ::1] D,
                     const double[::1] theta, double sigma2):
    cdef Py_ssize_t n = D.shape[0], q = D.shape[1], i, j
    cdef Py_ssize_t d = q + 1 if kind == 1 else q
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad_arr = np.zeros(d)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] H_arr = np.zeros((d, d))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] G_arr = np.zeros((q, q))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] S_arr
    cdef double[::1] grad = grad_arr
    cdef double[:, ::1] H = H_arr
    cdef double[:, ::1] G = G_arr
    cdef double[:, ::1] S
    cdef double eta, r, p, w, res, s, ll = 0.0, rss = 0.0, rho = 0.0
    if kind == 1:
        rho = theta[q]
    if kind == 2:
        S_arr = np.empty((n, q))
        S = S_arr
    with nogil:
        for i in range(n):
            eta = 0.0
            for j in range(q):
                eta = eta + D[i, j] * theta[j]
            if kind == 2:
                p = expit(eta)
                ll = ll + y[i] * eta - log1pexp(eta)
                res = y[i] - p
                s = sqrt(p * (1.0 - p))
                for j in range(q):
                    S[i, j] = s * D[i, j]
            else:
                res = y[i] - eta
                rss = rss + res * res
            for j in range(q):
                grad[j] = grad[j] + D[i, j] * res
        if kind == 2:
            _gram(S, G)
        else:
            _gram(D, G)
    if kind == 0:
        w = 1.0 / sigma2
        ll = -n * (HALF_LOG_2PI + 0.5 * log(sigma2)) - 0.5 * rss * w
    elif kind == 1:
        w = exp(-rho)
        ll = -n * (HALF_LOG_2PI + 0.5 * rho) - 0.5 * rss * w
    else:
        w = 1.0
    for j in range(q):
        grad[j] = grad[j] * w
        for i in range(q):
            H[j, i] = G[j, i] * w
    if kind == 1:
        for j in range(q):
            H[j, q] = grad[j]
            H[q, j] = grad[j]
        grad[q] = -0.5 * n + 0.5 * rss * w
        H[q, q] = 0.5 * rss * w
    return ll, grad_arr, H_arr
