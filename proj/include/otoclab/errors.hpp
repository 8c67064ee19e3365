#pragma once

#include <stdexcept>
#include <string>

namespace otoclab {

// Precondition or configuration violation. The CLI maps this to exit code 2.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical postcondition could not be met. The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace otoclab
