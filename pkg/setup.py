import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "complaint_insight._core._kernels",
        ["src/complaint_insight/_core/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # no FMA contraction: results must match the Python fallback bit for bit
        extra_compile_args=["-O2", "-ffp-contract=off"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
