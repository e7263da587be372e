"""Build script for the optional compiled tree kernels.

The pure-Python implementation in ``metawarm.hpo._tree_py`` is used whenever
the extension is missing, so a failed compile only costs speed.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("METAWARM_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "metawarm.hpo._tree_ext",
                    ["src/metawarm/hpo/_tree_ext.pyx"],
                    include_dirs=[np.get_include()],
                    language="c++",
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build-environment dependent
        print(f"metawarm: building without compiled kernels ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
