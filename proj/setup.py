import os

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup


def eigen_include():
    candidates = [
        os.environ.get("EIGEN3_INCLUDE_DIR"),
        "/usr/include/eigen3",
        "/usr/local/include/eigen3",
    ]
    for path in candidates:
        if path and os.path.isdir(path):
            return path
    raise RuntimeError("Eigen3 headers not found; set EIGEN3_INCLUDE_DIR")


sources = sorted(
    os.path.join("src", name) for name in os.listdir("src") if name.endswith(".cpp")
) + ["python/ssrecon_pybind.cpp"]

ext_modules = [
    Pybind11Extension(
        "ssrecon_lab._core",
        sources,
        include_dirs=["include", "vendor", eigen_include()],
        cxx_std=20,
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=ext_modules, cmdclass={"build_ext": build_ext})
