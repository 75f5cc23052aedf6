import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/mtmkl/_smo_cy.pyx",
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": 3,
        },
    )
except ImportError:
    # Pure-Python fallback is selected at import time; the wheel just
    # ships without the compiled solver.
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[np.get_include()])
