"""Backend selection for the hot loops.

The compiled Cython module is used when it imports; otherwise the numpy
fallback is used. Set ``NSMILD_PURE_PYTHON=1`` to force the fallback.

All functions work on flattened, C-contiguous arrays:

``etd_weights(lam, h, decay, w_left, w_right)``
    Fills, per mode with eigenvalue ``lam >= 0``, the decay factor
    ``exp(-lam h)`` and the exact weights of the left/right nodal values for
    ``int_0^h exp(-lam (h - s)) N(s) ds`` with ``N`` linear on the cell.
``etd_accumulate(acc, decay, w_left, w_right, left, right)``
    In place ``acc = decay*acc + w_left*left + w_right*right``; the complex
    arrays have shape ``(ncomp, nmodes)``.
``power_sum(values, q)`` / ``max_magnitude(values)``
    Reductions of the pointwise Euclidean length over ``(ncomp, npoints)``.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("NSMILD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

etd_weights = _impl.etd_weights
etd_accumulate = _impl.etd_accumulate
power_sum = _impl.power_sum
max_magnitude = _impl.max_magnitude


def use_backend(name):
    """Switch backends at runtime (used by the benchmark and tests)."""
    global BACKEND, _impl, etd_weights, etd_accumulate, power_sum, max_magnitude
    if name == "cython":
        from . import _ckernels as impl
    elif name == "python":
        impl = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    _impl = impl
    BACKEND = name
    etd_weights = impl.etd_weights
    etd_accumulate = impl.etd_accumulate
    power_sum = impl.power_sum
    max_magnitude = impl.max_magnitude
