"""Build the optional compiled kernel core.

The extension is optional: if Cython or a C compiler is missing the package
installs without it and ``tssr`` falls back to the pure-Python kernels.
"""
import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernels not built ({exc}); using Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); using Python fallback")


def extensions():
    if os.environ.get("TSSR_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "tssr._kernels",
        ["src/tssr/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # no -ffast-math and no FMA contraction: results must match libm
        # and CPython's math module bit for bit
        extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
        libraries=["m"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
