import os
import sys

from setuptools import setup

# The interval engine has a compiled core (Cython) and a pure-Python twin.
# If Cython or a C compiler is unavailable the install still succeeds and the
# package falls back to the Python engine at import time.
ext_modules = []
if os.environ.get("MARSIM_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "marsim._kernel",
                    ["src/marsim/_kernel.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        print("Cython not available; building without the compiled engine", file=sys.stderr)

setup(ext_modules=ext_modules)
