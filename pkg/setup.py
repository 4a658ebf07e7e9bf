"""Build script: compiles the Cython event/ODE kernels when a toolchain is
available, and falls back to a pure-Python install otherwise.

The compiled module draws random variates through numpy's C distribution
functions, so it needs numpy headers plus the npyrandom static library.
"""

import os

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    npyrandom_dir = os.path.join(os.path.dirname(np.random.__file__), "lib")
    ext_modules = cythonize(
        [
            Extension(
                "lqfsim._kernel",
                ["src/lqfsim/_kernel.pyx"],
                include_dirs=[np.get_include()],
                library_dirs=[npyrandom_dir],
                libraries=["npyrandom"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython or numpy at build time: install pure Python, the package
    # selects the fallback kernels at import.
    ext_modules = []

setup(ext_modules=ext_modules)
