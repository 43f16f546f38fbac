"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python kernel backend is
selected at import time), so any failure here degrades gracefully to a
source-only install.

    pip install -e . --no-build-isolation
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/mftube/_kernels/_ckernels.pyx",
        language_level=3,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [numpy.get_include()]
except ImportError as exc:  # pragma: no cover - depends on build env
    print(f"mftube: Cython/numpy unavailable ({exc}); "
          "building without compiled kernels")
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
