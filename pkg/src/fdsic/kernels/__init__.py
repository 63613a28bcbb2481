"""Hot-loop kernels with a compiled core and a NumPy fallback.

The compiled extension (``fdsic.kernels._core``, built from Cython) is
preferred when it imported successfully; otherwise the NumPy implementation
in ``_fallback`` is used.  Set ``FDSIC_PURE_PYTHON=1`` to force the fallback,
e.g. for benchmarking the two against each other.

All kernels operate on contiguous complex128 arrays:

``conv_trunc(x, h, offset)``
    Full linear convolution of ``x`` with ``h``, evaluated at output indices
    ``offset .. offset + len(x) - 1`` (missing history treated as zeros).
``hammerstein(x, a0, a1)``
    Elementwise ``a0*x + a1*x*|x|**2``.
``quantize_midtread(x, step, limit)``
    Uniform mid-tread quantization of real and imaginary rails with
    saturation at ``+-limit``.
"""

import os

from . import _fallback

_impl = _fallback
if os.environ.get("FDSIC_PURE_PYTHON", "0") != "1":
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'numpy'."""
    return "compiled" if _impl is not _fallback else "numpy"


def conv_trunc(x, h, offset=0):
    return _impl.conv_trunc(x, h, offset)


def hammerstein(x, a0, a1):
    return _impl.hammerstein(x, a0, a1)


def quantize_midtread(x, step, limit):
    return _impl.quantize_midtread(x, step, limit)
