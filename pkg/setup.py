import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("STICKY_PEP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "sticky_pep._ckernel",
                    ["src/sticky_pep/_ckernel.pyx"],
                    # both backends must round identically
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
