"""Build script for the optional compiled kernels.

The extension is optional: when Cython or a C compiler is missing the
package still installs and falls back to the numpy kernels at import.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("QAFNY_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "qafny._kernels._ckernels",
                    ["src/qafny/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
