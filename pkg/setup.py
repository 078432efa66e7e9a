import os

from setuptools import Extension, setup

# AMLWB_NO_EXT=1 skips the compiled kernels; the package then runs on the
# pure-Python fallback in amlworkbench.kernels._purepy.
ext_modules = []
if os.environ.get("AMLWB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "amlworkbench.kernels._ext",
                    ["src/amlworkbench/kernels/_ext.pyx"],
                    # -ffp-contract=off: no FMA contraction, so the compiled
                    # kernels are bit-identical to the pure-Python fallback.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level="3",
        )

setup(ext_modules=ext_modules)
