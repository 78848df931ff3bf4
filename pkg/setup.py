"""Builds the optional compiled evaluator.

The extension is marked optional: when no compiler (or no Cython) is
available the install still succeeds and the package runs on the NumPy
fallback.  Compile flags deliberately exclude -ffast-math and -march=native
so results are reproducible across machines.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("KEXPR_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "kexpr.kernel._speedups",
                    ["src/kexpr/kernel/_speedups.pyx"],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
