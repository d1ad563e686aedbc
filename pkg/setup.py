"""Build the optional compiled kernel extension.

The package works without it: ce_lcrt falls back to the pure-Python
kernels at import time if the extension is missing or fails to build.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CE_LCRT_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "ce_lcrt._kernels",
                    ["src/ce_lcrt/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except Exception as exc:  # pragma: no cover - build-env dependent
        print(f"ce-lcrt: skipping compiled kernels ({exc}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
