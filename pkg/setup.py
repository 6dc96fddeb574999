import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off: the pure-Python fallback must produce bit-identical
# results, so no FMA contraction.  No -ffast-math for the same reason.
extensions = [
    Extension(
        "gridscout._native",
        sources=["src/gridscout/_native.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

if cythonize is not None and not os.environ.get("GRIDSCOUT_SKIP_NATIVE"):
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
else:
    ext_modules = []

setup(ext_modules=ext_modules)
