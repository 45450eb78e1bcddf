"""Build the optional compiled kernel.

Without Cython or a C compiler the package installs as pure Python and the
planner falls back to the interpreted loop.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension(
            "prrtstar._ckernels",
            ["src/prrtstar/_ckernels.pyx"],
            extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
        )],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
