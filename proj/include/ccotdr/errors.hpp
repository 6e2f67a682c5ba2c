#pragma once

#include <stdexcept>
#include <string>

namespace ccotdr {

// Invalid scenario / configuration input. CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure in the analysis stage (missing calibration peak, no tone, bad
// gauge selection, ...). CLI maps this to exit code 3.
class analysis_error : public std::runtime_error {
public:
    explicit analysis_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ccotdr
