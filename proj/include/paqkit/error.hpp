#pragma once

#include <stdexcept>
#include <string>

namespace paqkit {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

}
