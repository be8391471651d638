#pragma once

#include <stdexcept>
#include <string>

namespace gestformer {

// Error taxonomy shared by the library and the CLI exit-code mapping:
//   usage/config problems -> exit 2, data/format problems -> exit 3,
//   numerical failures -> exit 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes (messages name both shapes).
struct DimensionError : Error {
    using Error::Error;
};

// Bad configuration value (even kernel size, unknown config key, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Invalid runtime input (out-of-range label, misaligned sample ids, ...).
struct InputError : Error {
    using Error::Error;
};

// Malformed or truncated file content.
struct FormatError : Error {
    using Error::Error;
};

// API contract violation (non-scalar loss passed to backward, ...).
struct ContractError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
    using Error::Error;
};

} // namespace gestformer
