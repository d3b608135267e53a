"""Build script: compiles the optional fast kernel extension.

The package works without the extension (pure NumPy fallback); set
LABOPT_PURE_PYTHON=1 to skip compilation entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the speedup extension, but never fail the install over it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            sys.stderr.write(f"warning: skipping compiled extension ({exc})\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            sys.stderr.write(f"warning: could not build {ext.name} ({exc}); "
                             "falling back to the pure-Python backend\n")


def extensions():
    if os.environ.get("LABOPT_PURE_PYTHON") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "labopt._kernels_cy",
        sources=["src/labopt/_kernels_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-funroll-loops"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
