"""Build script: compiles the optional LP pivot kernel when Cython is available.

The package is fully functional without the extension; the pure-Python kernel
is selected at import time as a fallback.  Build in place with

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "evikit._kernels._pivot_cy",
                ["src/evikit/_kernels/_pivot_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
