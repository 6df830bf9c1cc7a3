"""Build script: compiles the kernel extension when Cython is available.

The package is fully functional without the extension (the numpy fallback
is selected at import), so a missing compiler or Cython only costs speed.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("phlab.kernels._ckern",
                   ["src/phlab/kernels/_ckern.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API",
                                   "NPY_1_7_API_VERSION")])],
        language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
