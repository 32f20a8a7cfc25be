"""Kernel selection: compiled extension if built, pure Python otherwise.

Both builds export the same names with identical behavior; parity is
enforced by property tests.  `KERNEL_BUILD` says which one is live, and
HAMMERSIM_FORCE_PY=1 in the environment pins the Python build (useful for
benchmarking and for debugging a suspected extension issue).
"""

from __future__ import annotations

import os

if os.environ.get("HAMMERSIM_FORCE_PY") == "1":
    from ._kernel_py import (AGGRESSOR, NONE, VICTIM,  # noqa: F401
                             KERNEL_BUILD, CounterCore, TopQueue)
else:
    try:
        from ._kernel import (AGGRESSOR, NONE, VICTIM,  # noqa: F401
                              KERNEL_BUILD, CounterCore, TopQueue)
    except ImportError:
        from ._kernel_py import (AGGRESSOR, NONE, VICTIM,  # noqa: F401
                                 KERNEL_BUILD, CounterCore, TopQueue)

__all__ = ["CounterCore", "TopQueue", "KERNEL_BUILD",
           "AGGRESSOR", "VICTIM", "NONE"]
