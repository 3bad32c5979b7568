"""Build script for the compiled propagation kernel.

The extension is optional: if Cython or a C compiler is unavailable the
package installs anyway and falls back to the numpy kernels at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler is not fatal
            print(f"warning: skipping compiled kernel ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping compiled kernel ({exc})")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "chaosbound._core",
        sources=["src/chaosbound/_core.pyx"],
        include_dirs=[np.get_include()],
        # -ffp-contract=off: no FMA contraction, so the compiled kernels
        # round exactly like the numpy fallback (bitwise-identical runs)
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
