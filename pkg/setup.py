import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the compiled kernels if possible, fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"compiled kernels skipped ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); pure-Python fallback will be used")


def extensions():
    try:
        import os

        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    # the numpy.random C distributions live in a static helper library
    npyrandom_dir = os.path.abspath(
        os.path.join(numpy.get_include(), "..", "..", "random", "lib")
    )
    ext = Extension(
        "rootbarrier._kernels",
        ["src/rootbarrier/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        library_dirs=[npyrandom_dir],
        libraries=["npyrandom"],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
