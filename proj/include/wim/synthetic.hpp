#pragma once

#include <array>
#include <cstddef>

#include "wim/expfam.hpp"
#include "wim/learning.hpp"

namespace wim::synthetic {

inline constexpr std::size_t kClasses = 3;

/// Uniform class prior, x | y ~ Normal(means[y], sigmas[y]^2).
struct GeneratorConfig {
    std::array<double, kClasses> means{-1.0, 0.0, 1.0};
    std::array<double, kClasses> sigmas{1.0, 1.0, 1.0};

    static GeneratorConfig well_specified() { return {}; }
    /// Heteroscedastic world for the misspecification study.
    static GeneratorConfig misspecified() { return {{-1.0, 0.0, 1.0}, {0.7, 1.0, 1.4}}; }

    void validate() const;
};

using SyntheticData = Dataset<double, std::size_t>;

SyntheticData sample_generator(const GeneratorConfig& config, std::size_t count, RngStream& rng);

/// p(y | x) ∝ exp(a_y x^2 + b_y x + c_y); parameters laid out as
/// (a_0, b_0, c_0, a_1, b_1, c_1, a_2, b_2, c_2).
class QuadLogReg {
public:
    using Given = double;
    using Target = std::size_t;
    static constexpr std::size_t kDim = 3 * kClasses;

    QuadLogReg() : params_(Vector::Zero(kDim)) {}
    explicit QuadLogReg(Vector params) { set_params(params); }

    std::size_t feature_dim() const { return kDim; }
    std::size_t target_size(Given = 0.0) const { return kClasses; }
    const Vector& params() const { return params_; }
    void set_params(const Vector& theta);
    bool project() { return false; }

    void accumulate_statistics(Given x, Target y, double w, Vector& acc) const;
    double log_prob(Given x, Target y) const;
    Target sample(Given x, RngStream& rng) const;

    double class_score(Given x, Target y) const;

private:
    Vector params_;
};

/// Block one-hot (x^2, x, 1) in block y.
Vector qlr_features(double x, std::size_t y);

/// argmax_y a_y x^2 + b_y x + c_y, ties to the smallest class.
std::size_t map_decision(const QuadLogReg& posterior, double x);

/// Posterior of the generating model written as quadratic logistic regression.
QuadLogReg bayes_posterior(const GeneratorConfig& config);

/// p(x | y) ∝ exp(d_y x^2 + e_y x); parameters (d_0, e_0, d_1, e_1, d_2, e_2).
/// Feasible when every d_y <= -kMinCurvature; with shared_d all d_y coincide.
class ClassGaussian {
public:
    using Given = std::size_t;
    using Target = double;
    static constexpr std::size_t kDim = 2 * kClasses;
    static constexpr double kMinCurvature = 1e-3;

    explicit ClassGaussian(bool shared_d = false);
    ClassGaussian(Vector params, bool shared_d = false);

    /// Same Normal(mean, variance) for every class.
    static ClassGaussian from_moments(double mean, double variance, bool shared_d = false);

    std::size_t feature_dim() const { return kDim; }
    bool shared_d() const { return shared_d_; }
    const Vector& params() const { return params_; }
    void set_params(const Vector& theta);
    bool project();

    void accumulate_statistics(Given y, Target x, double w, Vector& acc) const;
    double log_prob(Given y, Target x) const;
    Target sample(Given y, RngStream& rng) const;

    double d(std::size_t y) const { return params_[static_cast<Eigen::Index>(2 * y)]; }
    double e(std::size_t y) const { return params_[static_cast<Eigen::Index>(2 * y + 1)]; }

private:
    Vector params_;
    bool shared_d_;
};

struct Moments {
    double mean;
    double variance;
};

/// (d, e) -> (mean, variance); throws ImproperDistribution if d > -eps.
Moments natural_to_moments(double d, double e, double eps = ClassGaussian::kMinCurvature);
std::pair<double, double> moments_to_natural(const Moments& m);

/// Draws x ~ p(x | y) for the given natural parameters.
double gauss_conditional_sample(const ClassGaussian& params, std::size_t y, RngStream& rng);

double error_rate(const QuadLogReg& posterior, const SyntheticData& data);

}  // namespace wim::synthetic
