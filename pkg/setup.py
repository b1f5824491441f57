"""Builds the compiled search kernel.

The package works without the extension (a pure-Python kernel is selected at
import time), so a failed build is not fatal: run
``HFMAPF_SKIP_EXT=1 pip install -e . --no-build-isolation`` to skip it.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("HFMAPF_SKIP_EXT"):
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "hfmapf._engine",
                ["src/hfmapf/_engine.pyx"],
                language="c++",
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
