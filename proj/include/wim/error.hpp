#pragma once

#include <stdexcept>
#include <string>

namespace wim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameterization with no normalizable density (e.g. non-negative
/// quadratic coefficient of a Gaussian).
class ImproperDistribution : public Error {
public:
    explicit ImproperDistribution(const std::string& what)
        : Error("improper distribution: " + what) {}
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double residual)
        : Error(what + " (final residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

}  // namespace wim
