"""Optional compiled build: the core modules are plain Python that Cython can
compile as-is for speed.  Without Cython the package installs pure Python."""

import os

from setuptools import setup

MODULES = ["mesh", "flatten", "retriangulation", "removal", "metric", "mapping", "coarsen"]

ext_modules = []
if os.environ.get("INTRICOARSE_PURE") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [f"src/intricoarse/{m}.py" for m in MODULES],
            compiler_directives={"language_level": 3, "binding": True},
            quiet=True,
        )

setup(ext_modules=ext_modules)
