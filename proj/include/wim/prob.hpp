#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wim/error.hpp"
#include "wim/rng.hpp"

namespace wim {

/// Numerical tolerances shared by validation code and property tests.
struct Tolerances {
    double normalization = 1e-12;
    double probability = 1e-10;
};

inline constexpr Tolerances kTolerances{};

/// Finite discrete distribution. Entries are non-negative and sum to one.
class ProbVector {
public:
    ProbVector() = default;

    /// Validates; throws Error if the vector is not a distribution within `tol`.
    explicit ProbVector(std::vector<double> values, double tol = kTolerances.normalization);

    static ProbVector uniform(std::size_t n);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

private:
    struct Unchecked {};
    ProbVector(std::vector<double> values, Unchecked) : values_(std::move(values)) {}
    friend ProbVector normalize(std::span<const double>);

    std::vector<double> values_;
};

double log_sum_exp(std::span<const double> log_weights);

/// Proportional to exp(log_weights), computed with a max shift. Throws
/// Error("degenerate distribution") when every entry is -inf.
ProbVector normalize(std::span<const double> log_weights);

/// Index i with probability p[i]. Consumes exactly one uniform draw.
std::size_t sample_discrete(const ProbVector& p, RngStream& rng);

/// Same as sample_discrete(normalize(log_weights), rng) without materializing
/// the ProbVector. One uniform draw.
std::size_t sample_log_weights(std::span<const double> log_weights, RngStream& rng);

double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace wim
