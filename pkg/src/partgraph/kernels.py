"""Backend dispatch for the hot kernels.

Two interchangeable implementations exist: numba-jitted loops
(``_kernels_nb``) and vectorized numpy (``_kernels_np``). The default is
numba when it imports cleanly; set PARTGRAPH_BACKEND=numpy to force the
fallback, or call :func:`use` to switch at runtime (handy for the
backend-comparison benchmark).
"""

import os

from . import _kernels_np

_FUNCTIONS = (
    "sample_bilinear",
    "upsample",
    "upsample_backward",
    "warp_gather",
    "warp_gather_backward",
    "hough_splat",
    "segment_distance_field",
    "nearest_point_field",
    "any_projection_near",
    "group_argmin",
    "dykstra",
    "dykstra_backward",
    "pgd_unrolled",
)


def _load(name):
    if name == "numpy":
        return _kernels_np
    if name == "numba":
        from . import _kernels_nb

        return _kernels_nb
    raise ValueError(f"unknown kernel backend {name!r} (expected 'numba' or 'numpy')")


def _default():
    requested = os.environ.get("PARTGRAPH_BACKEND", "numba")
    try:
        return _load(requested)
    except ImportError:
        return _kernels_np


_impl = _default()


def use(name):
    """Switch the active kernel backend ('numba' or 'numpy')."""
    global _impl
    _impl = _load(name)


def active_backend():
    return _impl.BACKEND_NAME


def __getattr__(name):
    if name in _FUNCTIONS:
        return getattr(_impl, name)
    raise AttributeError(name)
