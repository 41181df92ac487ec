"""Backend selection for the hot per-trial kernels.

The compiled Cython extension is preferred; the pure-numpy twin is used
when it is missing.  Set ``LCSAE_KERNELS=python`` (or ``cython``) to force
a backend; forcing ``cython`` raises if the extension is unavailable.
"""

import os

_forced = os.environ.get("LCSAE_KERNELS", "").strip().lower()
if _forced not in ("", "cython", "python"):
    raise RuntimeError(f"LCSAE_KERNELS must be 'cython' or 'python', got {_forced!r}")

if _forced == "python":
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        from . import _kernels_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

forward2 = _impl.forward2
fused_sgd2 = _impl.fused_sgd2
match_batch = _impl.match_batch
reinforce_batch = _impl.reinforce_batch
