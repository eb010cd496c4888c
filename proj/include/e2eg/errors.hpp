#pragma once

#include <stdexcept>
#include <string>

namespace e2eg {

/// Malformed input file or record.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, config keys, or incompatible settings.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or index mismatch between tensors, heads, and targets.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace e2eg
