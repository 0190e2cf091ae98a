import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


OPTIONAL_FLAGS = ("-fcx-limited-range",)


class OptionalBuildExt(build_ext):
    """Skip the compiled kernels when no compiler is available."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"compiled kernels not built, using numpy fallback: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
            return
        except Exception:  # noqa: BLE001
            # older or non-GCC compilers may reject the complex-arithmetic flag
            ext.extra_compile_args = [a for a in ext.extra_compile_args if a not in OPTIONAL_FLAGS]
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"failed to build {ext.name}, using numpy fallback: {exc}")


try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("qct._ckernels", ["src/qct/_ckernels.pyx"], extra_compile_args=["-O3", *OPTIONAL_FLAGS])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
