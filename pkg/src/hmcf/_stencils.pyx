# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled second-order central-difference kernels.

Arrays arrive reshaped to (pre, N, post) with the differentiated axis in the
middle.  ``shift`` has length ``post`` and is the jump of the field across one
period (nonzero only when differentiating positions of a translated-periodic
immersion).
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def d1_kernel(const double[:, :, ::1] f, double[:, :, ::1] out, double h,
              bint periodic, const double[::1] shift):
    cdef Py_ssize_t pre = f.shape[0], n = f.shape[1], post = f.shape[2]
    cdef Py_ssize_t a, i, b
    cdef double inv = 0.5 / h
    for a in range(pre):
        for i in range(1, n - 1):
            for b in range(post):
                out[a, i, b] = (f[a, i + 1, b] - f[a, i - 1, b]) * inv
        if periodic:
            for b in range(post):
                out[a, 0, b] = (f[a, 1, b] - (f[a, n - 1, b] - shift[b])) * inv
                out[a, n - 1, b] = ((f[a, 0, b] + shift[b]) - f[a, n - 2, b]) * inv
        else:
            for b in range(post):
                out[a, 0, b] = (-3.0 * f[a, 0, b] + 4.0 * f[a, 1, b] - f[a, 2, b]) * inv
                out[a, n - 1, b] = (3.0 * f[a, n - 1, b] - 4.0 * f[a, n - 2, b]
                                    + f[a, n - 3, b]) * inv


def d2_kernel(const double[:, :, ::1] f, double[:, :, ::1] out, double h,
              bint periodic, const double[::1] shift):
    cdef Py_ssize_t pre = f.shape[0], n = f.shape[1], post = f.shape[2]
    cdef Py_ssize_t a, i, b
    cdef double inv = 1.0 / (h * h)
    for a in range(pre):
        for i in range(1, n - 1):
            for b in range(post):
                out[a, i, b] = (f[a, i + 1, b] - 2.0 * f[a, i, b] + f[a, i - 1, b]) * inv
        if periodic:
            for b in range(post):
                out[a, 0, b] = (f[a, 1, b] - 2.0 * f[a, 0, b]
                                + (f[a, n - 1, b] - shift[b])) * inv
                out[a, n - 1, b] = ((f[a, 0, b] + shift[b]) - 2.0 * f[a, n - 1, b]
                                    + f[a, n - 2, b]) * inv
        else:
            for b in range(post):
                out[a, 0, b] = (2.0 * f[a, 0, b] - 5.0 * f[a, 1, b] + 4.0 * f[a, 2, b]
                                - f[a, 3, b]) * inv
                out[a, n - 1, b] = (2.0 * f[a, n - 1, b] - 5.0 * f[a, n - 2, b]
                                    + 4.0 * f[a, n - 3, b] - f[a, n - 4, b]) * inv
