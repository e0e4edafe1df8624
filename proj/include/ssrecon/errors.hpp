#pragma once

#include <stdexcept>
#include <string>

namespace ssrecon {

/// Training blew up: a non-finite loss appeared, usually a too-large stepsize.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long epoch)
        : std::runtime_error(what), epoch_(epoch) {}

    long epoch() const noexcept { return epoch_; }

private:
    long epoch_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ssrecon
