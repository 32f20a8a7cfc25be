"""Build hook: compile the counter/queue kernel when Cython and a C
toolchain are available; otherwise install pure-Python only (the package
selects the fallback implementation at import time)."""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/hammersim/_kernel.pyx"],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - environment-dependent
    print(f"hammersim: compiled kernel skipped ({exc}); "
          "using the pure-Python fallback", file=sys.stderr)

setup(ext_modules=ext_modules)
