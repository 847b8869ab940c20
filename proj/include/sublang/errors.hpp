#pragma once

#include <stdexcept>
#include <string>

namespace sublang {

// Bad arguments or misuse of the API/CLI (exit code 1 at the CLI).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or missing input data (exit code 2 at the CLI).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sublang
