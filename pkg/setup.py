from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "henonlog.shooting._speedups",
                ["src/henonlog/shooting/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # The package falls back to the pure-Python kernel when the
    # extension is unavailable; installation must still succeed.
    ext_modules = []

setup(ext_modules=ext_modules)
