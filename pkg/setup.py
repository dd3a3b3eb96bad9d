"""Build the optional compiled kernel; the package falls back to numpy without it."""
import os
import shlex

from setuptools import setup

# -march=native matters: the lane kernel relies on wide SIMD registers
CFLAGS = shlex.split(os.environ.get("HOPFLINK_CFLAGS", "-O3 -march=native"))

ext_modules = []
if os.environ.get("HOPFLINK_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("hopflink._kernels", ["src/hopflink/_kernels.pyx"],
                       include_dirs=[np.get_include(), "src/hopflink"],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                       extra_compile_args=CFLAGS)],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
