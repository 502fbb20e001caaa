"""Build script for the optional compiled fit kernel.

The package is fully functional without the extension: lobfit.kernels
falls back to the pure-Python implementation when the compiled module
is missing, so a failed native build is deliberately non-fatal.
"""

import sys

from setuptools import Extension, setup


def native_extension():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("lobfit: Cython not available, building without native kernel",
              file=sys.stderr)
        return []
    ext = Extension(
        "lobfit._native",
        ["src/lobfit/_native.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


try:
    extensions = native_extension()
except Exception as exc:  # noqa: BLE001 - any build failure falls back
    print(f"lobfit: native kernel build skipped ({exc})", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
