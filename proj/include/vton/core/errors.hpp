#pragma once

#include <stdexcept>
#include <string>

namespace vton {

// Exit-code mapping (see cli): ArgError/ShapeError/GeometryError -> 2,
// DependencyError -> 3, NumericalError -> 4, IoError and anything else -> 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct ArgError : Error {
    using Error::Error;
};

struct GeometryError : Error {
    using Error::Error;
};

struct DependencyError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace vton
