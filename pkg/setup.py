"""Build the optional Cython stencil kernels.

The package works without them: ``hmcf.stencils`` falls back to numpy when
the compiled module is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("HMCF_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "hmcf._stencils",
                    ["src/hmcf/_stencils.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
