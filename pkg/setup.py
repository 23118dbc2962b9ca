"""Build script: compiles the simulation kernel when Cython is available.

The extension is optional. If it fails to build, the package falls back to
the pure-Python kernel at import time.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "p2pspread.stochastic._ckernel",
                ["src/p2pspread/stochastic/_ckernel.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
