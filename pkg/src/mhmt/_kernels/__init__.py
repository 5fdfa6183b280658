"""Kernel backend selection.

The compiled extension is preferred; the numpy implementation is the
fallback and the reference the extension is tested against. Set
MHMT_FORCE_PY=1 before import to force the fallback (used by the benchmark
and the parity tests).
"""
import os

if os.environ.get("MHMT_FORCE_PY"):
    from . import _viterbi_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _viterbi_cy as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _viterbi_py as _impl

        BACKEND = "python"

viterbi_static = _impl.viterbi_static
viterbi_adaptive = _impl.viterbi_adaptive

__all__ = ["BACKEND", "viterbi_static", "viterbi_adaptive"]
