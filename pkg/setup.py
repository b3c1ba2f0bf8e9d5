import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

openmp = [] if os.environ.get("QAMEM_NO_OPENMP") else ["-fopenmp"]

extensions = [
    Extension(
        "qamem._ext._wigner",
        ["src/qamem/_ext/_wigner.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fcx-limited-range"] + openmp,
        extra_link_args=openmp,
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
