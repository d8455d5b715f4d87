"""Build the optional compiled recursions.

The package works without them: ``corrx.recursions_python`` is used whenever
the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("CORRX_NO_EXTENSION", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "corrx.recursions",
                    ["src/corrx/recursions.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
