import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the NumPy fallback covers a missing Cython
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("nkakeya._scan_ext", ["src/nkakeya/_scan_ext.pyx"], include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
