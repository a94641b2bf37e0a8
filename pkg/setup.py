from setuptools import setup, Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mci3p3.kernels._mcmc",
                ["src/mci3p3/kernels/_mcmc.pyx"],
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    # Pure-Python fallback kernel is selected at import time when the
    # extension is unavailable; the package still installs and works.
    ext_modules = []

setup(ext_modules=ext_modules)
