#include <pybind11/pybind11.h>
PYBIND11_MODULE(_sacpid, m) { m.doc() = "line follower core"; }
