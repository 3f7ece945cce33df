import numpy
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


class OptionalBuildExt(build_ext):
    """Build the compiled kernels when possible; the package falls back to
    the pure-Python implementations if the extension is missing."""

    def run(self):
        try:
            super().run()
        except (PlatformError, FileNotFoundError) as exc:
            print(f"skipping compiled kernels: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, FileNotFoundError) as exc:
            print(f"skipping {ext.name}: {exc}")


if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "pgal._kernels._brandes_cy",
                ["src/pgal/_kernels/_brandes_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
