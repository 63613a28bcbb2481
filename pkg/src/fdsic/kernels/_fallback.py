"""NumPy implementation of the hot-loop kernels."""

import numpy as np


def conv_trunc(x: np.ndarray, h: np.ndarray, offset: int = 0) -> np.ndarray:
    """Full convolution of x with h evaluated at offset .. offset+len(x)-1."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    h = np.ascontiguousarray(h, dtype=np.complex128)
    full = np.convolve(x, h)
    out = np.zeros(len(x), dtype=np.complex128)
    lo = max(offset, 0)
    hi = min(offset + len(x), len(full))
    if hi > lo:
        out[lo - offset:hi - offset] = full[lo:hi]
    return out


def hammerstein(x: np.ndarray, a0: complex, a1: complex) -> np.ndarray:
    """a0*x + a1*x*|x|^2, elementwise."""
    x = np.asarray(x, dtype=np.complex128)
    if a1 == 0:
        return a0 * x
    return a0 * x + a1 * x * (x.real * x.real + x.imag * x.imag)


def quantize_midtread(x: np.ndarray, step: float, limit: float) -> np.ndarray:
    """Quantize I and Q rails to a mid-tread grid, saturating at +-limit."""
    x = np.asarray(x, dtype=np.complex128)
    re = np.clip(step * np.round(x.real / step), -limit, limit)
    im = np.clip(step * np.round(x.imag / step), -limit, limit)
    return re + 1j * im
