import os

from setuptools import setup

ext_modules = []
if os.environ.get("HYBRIDGRID_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("hybridgrid._simplex_core", ["src/hybridgrid/_simplex_core.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # Pure-Python fallback is used at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
