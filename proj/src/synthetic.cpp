#include "wim/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace wim::synthetic {

namespace {

void check_class(std::size_t y) {
    if (y >= kClasses) throw Error("class index " + std::to_string(y) + " out of range");
}

}  // namespace

void GeneratorConfig::validate() const {
    for (double s : sigmas)
        if (!(s > 0.0)) throw Error("GeneratorConfig: sigma must be > 0");
}

SyntheticData sample_generator(const GeneratorConfig& config, std::size_t count, RngStream& rng) {
    config.validate();
    SyntheticData data;
    data.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t y = rng.below(kClasses);
        const double x = config.means[y] + config.sigmas[y] * rng.normal();
        data.push_back({x, y});
    }
    return data;
}

void QuadLogReg::set_params(const Vector& theta) {
    if (theta.size() != static_cast<Eigen::Index>(kDim)) throw Error("QuadLogReg: expected 9 parameters");
    params_ = theta;
}

double QuadLogReg::class_score(Given x, Target y) const {
    check_class(y);
    const auto b = static_cast<Eigen::Index>(3 * y);
    return params_[b] * x * x + params_[b + 1] * x + params_[b + 2];
}

void QuadLogReg::accumulate_statistics(Given x, Target y, double w, Vector& acc) const {
    check_class(y);
    const auto b = static_cast<Eigen::Index>(3 * y);
    acc[b] += w * x * x;
    acc[b + 1] += w * x;
    acc[b + 2] += w;
}

double QuadLogReg::log_prob(Given x, Target y) const {
    std::array<double, kClasses> s{};
    for (std::size_t k = 0; k < kClasses; ++k) s[k] = class_score(x, k);
    return s[y] - log_sum_exp(s);
}

QuadLogReg::Target QuadLogReg::sample(Given x, RngStream& rng) const {
    std::array<double, kClasses> s{};
    for (std::size_t k = 0; k < kClasses; ++k) s[k] = class_score(x, k);
    return sample_log_weights(s, rng);
}

Vector qlr_features(double x, std::size_t y) {
    Vector v = Vector::Zero(QuadLogReg::kDim);
    QuadLogReg().accumulate_statistics(x, y, 1.0, v);
    return v;
}

std::size_t map_decision(const QuadLogReg& posterior, double x) {
    std::size_t best = 0;
    double best_score = posterior.class_score(x, 0);
    for (std::size_t y = 1; y < kClasses; ++y) {
        const double s = posterior.class_score(x, y);
        if (s > best_score) {
            best = y;
            best_score = s;
        }
    }
    return best;
}

QuadLogReg bayes_posterior(const GeneratorConfig& config) {
    config.validate();
    Vector theta(QuadLogReg::kDim);
    for (std::size_t y = 0; y < kClasses; ++y) {
        const double mu = config.means[y];
        const double v = config.sigmas[y] * config.sigmas[y];
        const auto b = static_cast<Eigen::Index>(3 * y);
        theta[b] = -0.5 / v;
        theta[b + 1] = mu / v;
        theta[b + 2] = -0.5 * mu * mu / v - 0.5 * std::log(v);
    }
    return QuadLogReg(theta);
}

ClassGaussian::ClassGaussian(bool shared_d) : ClassGaussian(from_moments(0.0, 1.0, shared_d)) {}

ClassGaussian::ClassGaussian(Vector params, bool shared_d) : shared_d_(shared_d) {
    set_params(params);
}

ClassGaussian ClassGaussian::from_moments(double mean, double variance, bool shared_d) {
    const auto [d, e] = moments_to_natural({mean, variance});
    Vector theta(kDim);
    for (std::size_t y = 0; y < kClasses; ++y) {
        theta[static_cast<Eigen::Index>(2 * y)] = d;
        theta[static_cast<Eigen::Index>(2 * y + 1)] = e;
    }
    return ClassGaussian(theta, shared_d);
}

void ClassGaussian::set_params(const Vector& theta) {
    if (theta.size() != static_cast<Eigen::Index>(kDim)) throw Error("ClassGaussian: expected 6 parameters");
    params_ = theta;
}

bool ClassGaussian::project() {
    bool changed = false;
    if (shared_d_) {
        double mean_d = 0.0;
        for (std::size_t y = 0; y < kClasses; ++y) mean_d += d(y);
        mean_d /= static_cast<double>(kClasses);
        for (std::size_t y = 0; y < kClasses; ++y) {
            auto& dy = params_[static_cast<Eigen::Index>(2 * y)];
            if (dy != mean_d) {
                dy = mean_d;
                changed = true;
            }
        }
    }
    for (std::size_t y = 0; y < kClasses; ++y) {
        auto& dy = params_[static_cast<Eigen::Index>(2 * y)];
        if (dy > -kMinCurvature) {
            dy = -kMinCurvature;
            changed = true;
        }
    }
    return changed;
}

void ClassGaussian::accumulate_statistics(Given y, Target x, double w, Vector& acc) const {
    check_class(y);
    acc[static_cast<Eigen::Index>(2 * y)] += w * x * x;
    acc[static_cast<Eigen::Index>(2 * y + 1)] += w * x;
}

double ClassGaussian::log_prob(Given y, Target x) const {
    check_class(y);
    const Moments m = natural_to_moments(d(y), e(y));
    const double r = x - m.mean;
    return -0.5 * r * r / m.variance - 0.5 * std::log(2.0 * std::numbers::pi * m.variance);
}

ClassGaussian::Target ClassGaussian::sample(Given y, RngStream& rng) const {
    return gauss_conditional_sample(*this, y, rng);
}

Moments natural_to_moments(double d, double e, double eps) {
    if (!(d <= -eps))
        throw ImproperDistribution("quadratic coefficient " + std::to_string(d) + " is not <= -" +
                                   std::to_string(eps));
    return {-e / (2.0 * d), -1.0 / (2.0 * d)};
}

std::pair<double, double> moments_to_natural(const Moments& m) {
    if (!(m.variance > 0.0)) throw ImproperDistribution("variance must be positive");
    return {-0.5 / m.variance, m.mean / m.variance};
}

double gauss_conditional_sample(const ClassGaussian& params, std::size_t y, RngStream& rng) {
    check_class(y);
    const Moments m = natural_to_moments(params.d(y), params.e(y));
    return m.mean + std::sqrt(m.variance) * rng.normal();
}

double error_rate(const QuadLogReg& posterior, const SyntheticData& data) {
    if (data.empty()) return 0.0;
    std::size_t wrong = 0;
    for (const auto& ex : data)
        if (map_decision(posterior, ex.x) != ex.y) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(data.size());
}

}  // namespace wim::synthetic
