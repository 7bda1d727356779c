"""Hot loops of the diagnostics, compiled when the extension is available.

The backend is chosen at import: the Cython extension ``_ckernels`` if it was
built, the numpy fallback otherwise. Setting ``ACTIVESCALAR_KERNELS=python``
forces the fallback.
"""
import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("ACTIVESCALAR_KERNELS", "").lower() == "python":
        raise ImportError("python kernels requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def as_volume(f):
    """View a 2-D or 3-D field as a C-contiguous 3-D float64 array."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    if f.ndim == 2:
        return f[:, :, np.newaxis]
    if f.ndim != 3:
        raise ValueError(f"expected a 2-D or 3-D field, got ndim={f.ndim}")
    return f


def _pad3(values, fill):
    values = tuple(values)
    return values + (fill,) * (3 - len(values))


def truncated_energy(f, h, spacing, mask=None, impl=None):
    """Cell sums of (f-h)_+^2 and |grad_FD (f-h)_+|^2, optionally masked.

    Returns raw sums (multiply by the cell volume for integrals).
    """
    impl = impl or _impl
    vol = as_volume(f)
    inv2h = _pad3((1.0 / (2.0 * s) for s in spacing), 0.0)
    m = None
    if mask is not None:
        m = np.ascontiguousarray(as_volume(mask.astype(np.float64)).astype(np.uint8))
    return impl.truncated_energy(vol, float(h), inv2h, m)


def box_mean_oscillation(f, sides, strides=None, impl=None):
    impl = impl or _impl
    vol = as_volume(f)
    sides = _pad3(sides, 1)
    strides = sides if strides is None else _pad3(strides, 1)
    return impl.box_mean_oscillation(vol, sides, strides)


__all__ = ["BACKEND", "truncated_energy", "box_mean_oscillation", "as_volume"]
