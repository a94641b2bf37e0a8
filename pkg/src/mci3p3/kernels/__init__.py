"""Sampler kernel selection: compiled extension when available, else pure Python.

Set ``MCI3P3_PURE_PYTHON=1`` to force the fallback (used by the kernel
benchmark and the equivalence tests).
"""

import os

if os.environ.get("MCI3P3_PURE_PYTHON"):
    from ._mcmc_py import run_chain

    KERNEL = "python"
else:
    try:
        from ._mcmc import run_chain  # type: ignore[no-redef]

        KERNEL = "cython"
    except ImportError:
        from ._mcmc_py import run_chain  # type: ignore[no-redef]

        KERNEL = "python"

__all__ = ["run_chain", "KERNEL"]
