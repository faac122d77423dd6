"""Build script: compiles the optional Cython kernel extension.

Set COMMONINFO_PURE=1 to skip the extension and install the pure-Python
package (the numpy fallback kernels are selected automatically at import).
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("COMMONINFO_PURE"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "commoninfo._kernels_cy",
                    ["src/commoninfo/_kernels_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
