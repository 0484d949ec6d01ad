import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("mhdlimit._kernels", ["src/mhdlimit/_kernels.pyx"], include_dirs=[np.get_include()])],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
