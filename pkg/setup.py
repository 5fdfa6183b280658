import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("MHMT_PURE_PYTHON"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext = Extension(
            "mhmt._kernels._viterbi_cy",
            ["src/mhmt/_kernels/_viterbi_cy.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], language_level=3)
    except ImportError:
        # No Cython/numpy at build time: install pure Python, the package
        # falls back to the numpy kernels at import.
        ext_modules = []

setup(ext_modules=ext_modules)
