"""Build script for the optional compiled Monte Carlo kernels.

The package is fully functional without the extension: ``pssmax.montecarlo``
falls back to a pure-Python implementation of the same path-scan kernels at
import time.  The extension just makes the per-path scans fast.
"""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None and os.path.exists("src/pssmax/montecarlo/_kernels.pyx"):
    extensions = cythonize(
        [
            Extension(
                "pssmax.montecarlo._kernels",
                ["src/pssmax/montecarlo/_kernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
