# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched small-matrix log-determinants and Gaussian
log-likelihoods. Semantics identical to the numpy reference in _np_impl."""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, log, sqrt

cnp.import_array()


cdef inline double _creal(double complex z) noexcept:
    return z.real


def logdet_i_rho_gram(const double[:, ::1] u,
                      const double complex[:, :, ::1] cstack,
                      double rho):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t nk = u.shape[1]
    cdef Py_ssize_t q = cstack.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    scratch = np.empty((q, q), dtype=np.complex128)
    cdef double complex[:, ::1] a = scratch
    cdef Py_ssize_t s, k, i, j, l
    cdef double complex acc
    cdef double d, logdet

    for s in range(n):
        for i in range(q):
            for j in range(i + 1):
                acc = 0
                for k in range(nk):
                    acc = acc + u[s, k] * cstack[k, i, j]
                a[i, j] = rho * acc
            a[i, i] = a[i, i] + 1.0
        logdet = 0.0
        for i in range(q):
            for j in range(i + 1):
                acc = a[i, j]
                for l in range(j):
                    acc = acc - a[i, l] * a[j, l].conjugate()
                if i == j:
                    d = _creal(acc)
                    d = sqrt(d)
                    a[i, i] = d
                    logdet += 2.0 * log(d)
                else:
                    a[i, j] = acc / _creal(a[j, j])
        out[s] = logdet
    return out_arr


def mixture_loglik(const double[:, ::1] u,
                   const double complex[:, ::1] z,
                   const double complex[:, :, ::1] cstack,
                   double rho, double y_sq, double n_ambient):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t nk = u.shape[1]
    cdef Py_ssize_t q = cstack.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    scratch = np.empty((q, q), dtype=np.complex128)
    wbuf = np.empty(q, dtype=np.complex128)
    cdef double complex[:, ::1] a = scratch
    cdef double complex[::1] w = wbuf
    cdef Py_ssize_t s, k, i, j, l
    cdef double complex acc
    cdef double d, logdet, quad

    for s in range(n):
        for i in range(q):
            for j in range(i + 1):
                acc = 0
                for k in range(nk):
                    acc = acc + u[s, k] * cstack[k, i, j]
                a[i, j] = rho * acc
            a[i, i] = a[i, i] + 1.0
        logdet = 0.0
        for i in range(q):
            for j in range(i + 1):
                acc = a[i, j]
                for l in range(j):
                    acc = acc - a[i, l] * a[j, l].conjugate()
                if i == j:
                    d = _creal(acc)
                    d = sqrt(d)
                    a[i, i] = d
                    logdet += 2.0 * log(d)
                else:
                    a[i, j] = acc / _creal(a[j, j])
        quad = 0.0
        for i in range(q):
            acc = z[s, i]
            for l in range(i):
                acc = acc - a[i, l] * w[l]
            acc = acc / _creal(a[i, i])
            w[i] = acc
            quad += acc.real * acc.real + acc.imag * acc.imag
        out[s] = -n_ambient * log(M_PI) - logdet - (y_sq - rho * quad)
    return out_arr
