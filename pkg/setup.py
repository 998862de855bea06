"""Build script.  Compiles the optional mvtri._core extension.

The package works without the extension (a NumPy fallback is selected at
import time), so any failure to cythonize simply skips the build.  Set
MVTRI_NO_EXT=1 to force a pure-Python install.
"""
import os

from setuptools import setup


def extensions():
    if os.environ.get("MVTRI_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "mvtri._core",
        ["src/mvtri/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=extensions())
