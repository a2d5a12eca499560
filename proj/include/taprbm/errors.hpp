#pragma once

#include <stdexcept>
#include <string>

namespace taprbm {

/// Invalid argument to a library entry point (non-finite input, bad shape,
/// parameter outside its documented domain).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure that survived all stabilizations. Carries the offending
/// cavity fields so the failing site can be reported by callers.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double b, double a)
        : std::runtime_error(what), field_b(b), precision_a(a) {}

    double field_b = 0.0;
    double precision_a = 0.0;
};

/// Filesystem-level failure (missing file, short read, unwritable path).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Structured-file failure: bad magic, unsupported version, checksum mismatch,
/// truncated payload.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace taprbm
