import os

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Skip the extension when it cannot be compiled; the numpy fallback is used then."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover
            print(f"warning: compiled core not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: failed to build {ext.name} ({exc})")


try:
    from Cython.Build import cythonize
    extensions = cythonize(
        [Extension("bosefeedback._core.recursion",
                   ["src/bosefeedback/_core/recursion.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        compiler_directives={"language_level": 3},
        quiet=True,
    )
except ImportError:
    extensions = []

if os.environ.get("BOSEFEEDBACK_PURE_PYTHON", "0") not in ("", "0"):
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
