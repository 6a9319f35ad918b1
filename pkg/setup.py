"""Build hook for the optional compiled kernels.

The Cython extension is optional: if Cython or a C compiler is missing the
package installs anyway and ``sava.kernels`` falls back to pure Python.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SAVA_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "sava._ckernels",
                    sources=["src/sava/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives=dict(
                language_level=3, boundscheck=False, wraparound=False, cdivision=True
            ),
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
