from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension(
            "qsatlink._kernels",
            ["src/qsatlink/_kernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
            optional=True,
        )],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # no Cython/numpy or a cythonize error: pure-Python install
    print(f"qsatlink: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
