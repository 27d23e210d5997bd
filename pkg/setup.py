"""Build script: compiles the optional Cython stepping kernel.

The package is fully functional without the extension (a NumPy
implementation of the same kernel is selected at import time), so the
extension is marked optional and a failed compile does not abort the
install.
"""

from setuptools import Extension, setup

extensions = []
try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "tipwave._kernels",
                ["src/tipwave/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps the compiled kernel bit-identical
                # to the NumPy fallback (no FMA contraction).
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=extensions)
