"""Backend selection for the distance and inverse-kinematics kernels.

The compiled extension is used when importable; set ``WIREBEND_PURE_PYTHON=1``
to force the reference implementation.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("WIREBEND_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

segment_distance = _impl.segment_distance
segments_segments_min = _impl.segments_segments_min
segments_box_min = _impl.segments_box_min
segments_halfspace_min = _impl.segments_halfspace_min
rdp_keep = _impl.rdp_keep
capsules_clear = _impl.capsules_clear
capsules_segments_clear = _impl.capsules_segments_clear
rotation_log = _impl.rotation_log
dls_solve = _impl.dls_solve

__all__ = [
    "BACKEND",
    "segment_distance",
    "segments_segments_min",
    "segments_box_min",
    "segments_halfspace_min",
    "rdp_keep",
    "capsules_clear",
    "capsules_segments_clear",
    "rotation_log",
    "dls_solve",
]
