"""Build glue for the optional compiled matching kernels.

The package works without the extension (pure-Python fallback in
fedsched._core.kernels_py); if Cython or a C compiler is missing the
install proceeds without it.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fedsched._core._kernels",
                ["src/fedsched/_core/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
