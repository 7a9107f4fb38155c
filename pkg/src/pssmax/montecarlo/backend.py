"""Kernel backend selection: compiled extension if built, pure Python otherwise."""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _impl

    USING_COMPILED = True
except ImportError:  # extension not built; the mirror is drop-in
    _impl = _kernels_py
    USING_COMPILED = False

fv_scan = _impl.fv_scan
fv_query = _impl.fv_query
fv_passage = _impl.fv_passage
fv_moment = _impl.fv_moment
euler_scan = _impl.euler_scan

python_kernels = _kernels_py
