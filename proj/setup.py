import os

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

eigen = os.environ.get("EIGEN_INCLUDE_DIR", "/usr/include/eigen3")

ext = Pybind11Extension(
    "sizeunfold._core",
    [
        "python/bindings.cpp",
        "src/geometry.cpp",
        "src/refdist.cpp",
        "src/bias.cpp",
        "src/unfold.cpp",
        "src/regularize.cpp",
        "src/harness.cpp",
    ],
    include_dirs=["include", eigen],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
