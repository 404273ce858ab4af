"""Build script: compiles the optional Cython quadrature core.

The package is fully functional without the extension (a NumPy reference
backend is selected at import time when the compiled core is missing), so
any failure here degrades the build to pure Python rather than aborting it.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            "src/maxstop/backends/_core.pyx",
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: building without compiled core ({exc})")

setup(ext_modules=ext_modules)
