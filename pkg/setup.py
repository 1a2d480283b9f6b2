"""Build the optional compiled Monte Carlo kernel.

Without Cython or a C compiler the package installs without it and the
numpy kernel is used instead.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("NARROWESCAPE_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext = Extension(
            "narrowescape.montecarlo._kernels",
            ["src/narrowescape/montecarlo/_kernels.pyx"],
            extra_compile_args=["-O3", "-fopenmp"],
            extra_link_args=["-fopenmp"],
            optional=True,
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
