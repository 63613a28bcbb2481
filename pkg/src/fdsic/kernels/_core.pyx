# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot-loop kernels."""

import numpy as np

cimport numpy as cnp
from libc.math cimport rint

cnp.import_array()


def conv_trunc(x, h, long offset=0):
    """Full convolution of x with h evaluated at offset .. offset+len(x)-1."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] ha = np.ascontiguousarray(h, dtype=np.complex128)
    cdef Py_ssize_t n = xa.shape[0]
    cdef Py_ssize_t m = ha.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(n, dtype=np.complex128)
    cdef Py_ssize_t i, k, pos, lo, hi
    cdef double complex acc
    for i in range(n):
        pos = offset + i
        if pos < 0 or pos > n + m - 2:
            continue
        lo = pos - n + 1
        if lo < 0:
            lo = 0
        hi = pos
        if hi > m - 1:
            hi = m - 1
        acc = 0
        for k in range(lo, hi + 1):
            acc = acc + ha[k] * xa[pos - k]
        out[i] = acc
    return out


def hammerstein(x, double complex a0, double complex a1):
    """a0*x + a1*x*|x|^2, elementwise."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.complex128)
    cdef Py_ssize_t n = xa.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef Py_ssize_t i
    cdef double complex v
    cdef double mag2
    for i in range(n):
        v = xa[i]
        mag2 = v.real * v.real + v.imag * v.imag
        out[i] = a0 * v + a1 * v * mag2
    return out


def quantize_midtread(x, double step, double limit):
    """Quantize I and Q rails to a mid-tread grid, saturating at +-limit."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.complex128)
    cdef Py_ssize_t n = xa.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef Py_ssize_t i
    cdef double re, im
    for i in range(n):
        re = step * rint(xa[i].real / step)
        im = step * rint(xa[i].imag / step)
        if re > limit:
            re = limit
        elif re < -limit:
            re = -limit
        if im > limit:
            im = limit
        elif im < -limit:
            im = -limit
        out[i] = re + 1j * im
    return out
