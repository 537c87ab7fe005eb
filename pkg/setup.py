from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled kernels bit-for-bit equal to the
# pure-Python fallback (no FMA contraction of a*b+c).
extensions = [
    Extension(
        "bosonperm._kernels",
        ["src/bosonperm/_kernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    ),
)
