import sys

from setuptools import Extension, setup

# The compiled kernel core is optional: if Cython or a C compiler is
# missing the package installs anyway and falls back to the pure-Python
# kernels at import time.
ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "subsep._kernels._native",
                ["src/subsep/_kernels/_native.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": sys.version_info[0]},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
