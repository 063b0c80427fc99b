"""Build script: compiles the optional EFE scoring extension.

The package works without the extension (a numpy fallback is selected at
import time); pass AIFLOOP_PURE=1 to skip compilation entirely.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("AIFLOOP_PURE"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "aifloop._kernels.efe_core",
                    ["src/aifloop/_kernels/efe_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
