#pragma once

#include <stdexcept>

namespace rarepath {

/// Filesystem failure while reading or writing.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A data file (cohort CSV, model file, manifest) does not match its format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rarepath
