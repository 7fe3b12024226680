"""Build script for the optional Cython kernel extension.

The package works without the extension (numpy fallback in
``doconsist.kernels._pure``); set DOCONSIST_SKIP_EXT=1 to force a
pure-Python install.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("DOCONSIST_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            "src/doconsist/kernels/_fast.pyx",
            compiler_directives={"language_level": "3"},
        )
        for ext in ext_modules:
            ext.include_dirs.append(numpy.get_include())
            ext.extra_compile_args = ["-O3"]
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
