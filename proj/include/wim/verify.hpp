#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wim::verify {

/// Outcome of one oracle cross-check. `value` is the measured quantity that
/// was compared against `threshold`.
struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
    double seconds = 0.0;
};

/// Stationary marginals of random positive pairs: fixed-point residuals and
/// agreement with the dense eigensolver.
CheckResult check_stationary(std::uint64_t seed, std::size_t pairs = 200);

/// Strong check holds for pairs from a common joint and fails for a
/// y-independent likelihood against an x-dependent posterior.
CheckResult check_strong_vs_weak(std::uint64_t seed, std::size_t pairs = 20);

/// Analytic gradients against central differences: conditional likelihood on
/// quadratic logistic regression and tables, exact chain gradients for n <= 3.
CheckResult check_gradients(std::uint64_t seed);

/// Mean of the stochastic implicit update against its enumerated expectation,
/// coordinate-wise within `sigmas` standard errors.
CheckResult check_implicit_step(std::uint64_t seed, std::size_t steps = 200000, double sigmas = 4.0);

/// Implicit training on pairs drawn from a known positive joint; reports
/// KL(true joint || learned joint) in nats.
CheckResult check_exact_recovery(std::uint64_t seed, std::size_t samples = 5000, double max_kl = 0.01);

/// Gibbs marginals on a 2x2 grid against enumeration, and detailed balance
/// of the single-site transition matrices.
CheckResult check_gibbs(std::uint64_t seed, std::size_t sweeps = 100000, double max_tv = 0.02);

/// Numeric Bayes error against an independent Monte Carlo estimate of the
/// exact posterior's error.
CheckResult check_bayes_error(std::uint64_t seed);

/// All checks; `quick` uses fewer samples with the same thresholds.
std::vector<CheckResult> run_oracle_suite(std::uint64_t seed, bool quick);

std::string format_result(const CheckResult& r);

}  // namespace wim::verify
