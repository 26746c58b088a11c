import os

from pybind11.setup_helpers import ParallelCompile, Pybind11Extension, build_ext
from setuptools import setup

ParallelCompile("NPY_NUM_BUILD_JOBS").install()

CORE_SOURCES = [
    "src/domain.cpp",
    "src/risk.cpp",
    "src/gp.cpp",
    "src/lbfgs_box.cpp",
    "src/acquisition.cpp",
    "src/pbo.cpp",
    "src/simulator_surrogate.cpp",
    "src/simulator_external.cpp",
    "src/scenario.cpp",
    "src/weather_io.cpp",
    "src/experiment.cpp",
    "src/config.cpp",
]

eigen_include = os.environ.get("EIGEN3_INCLUDE_DIR", "/usr/include/eigen3")

ext = Pybind11Extension(
    "cropt._cropt",
    sources=CORE_SOURCES + ["bindings/module.cpp"],
    include_dirs=["include", "vendor", eigen_include],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
