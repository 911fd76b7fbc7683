import os

import numpy as np
from setuptools import Extension, setup

# Set TUMORSEG_NO_EXT=1 to install without the compiled kernels.
ext_modules = []
if not os.environ.get("TUMORSEG_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "tumorseg._ckernels",
                    ["src/tumorseg/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
