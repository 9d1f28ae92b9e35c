#pragma once

#include <stdexcept>
#include <string>

namespace emogene {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/layer dimension mismatches.
struct ShapeError : Error {
    using Error::Error;
};

// File format problems carry a distinct code per failure mode.
enum class IoCode {
    OpenFailed,
    BadMagic,
    Truncated,
    BadPointCount,
    DuplicateTensorName,
    VersionMismatch,
    BadHeader,
};

struct IoError : Error {
    IoCode code;
    IoError(IoCode c, const std::string& msg) : Error(msg), code(c) {}
};

struct ConfigError : Error {
    using Error::Error;
};

// Loss became non-finite during training; carries the step index.
struct DivergenceError : Error {
    std::size_t step;
    DivergenceError(std::size_t s, const std::string& msg) : Error(msg), step(s) {}
};

// find_idle_bounds found no idle run; callers fall back to defaults.
struct NoIdleError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

}  // namespace emogene
