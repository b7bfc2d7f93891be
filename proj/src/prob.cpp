#include "wim/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace wim {

ProbVector::ProbVector(std::vector<double> values, double tol) : values_(std::move(values)) {
    if (values_.empty()) throw Error("probability vector must be non-empty");
    double sum = 0.0;
    for (double v : values_) {
        if (!(v >= 0.0)) throw Error("probability entry is negative or NaN");
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
        throw Error("probability vector sums to " + std::to_string(sum));
}

ProbVector ProbVector::uniform(std::size_t n) {
    if (n == 0) throw Error("probability vector must be non-empty");
    return ProbVector(std::vector<double>(n, 1.0 / static_cast<double>(n)), Unchecked{});
}

double log_sum_exp(std::span<const double> log_weights) {
    const double m = log_weights.empty()
                         ? -std::numeric_limits<double>::infinity()
                         : *std::max_element(log_weights.begin(), log_weights.end());
    if (m == -std::numeric_limits<double>::infinity()) return m;
    double s = 0.0;
    for (double w : log_weights) s += std::exp(w - m);
    return m + std::log(s);
}

ProbVector normalize(std::span<const double> log_weights) {
    if (log_weights.empty()) throw Error("degenerate distribution: empty input");
    const double m = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(m)) throw Error("degenerate distribution");
    std::vector<double> p(log_weights.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(log_weights[i] - m);
        s += p[i];
    }
    for (double& v : p) v /= s;
    return ProbVector(std::move(p), ProbVector::Unchecked{});
}

std::size_t sample_discrete(const ProbVector& p, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        acc += p[i];
        last_positive = i;
        if (u < acc) return i;
    }
    return last_positive;  // u landed in the rounding slack above the cumulative sum
}

std::size_t sample_log_weights(std::span<const double> log_weights, RngStream& rng) {
    const double m = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(m)) throw Error("degenerate distribution");
    double total = 0.0;
    for (double w : log_weights) total += std::exp(w - m);
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        const double w = std::exp(log_weights[i] - m);
        if (w <= 0.0) continue;
        acc += w;
        last_positive = i;
        if (u < acc) return i;
    }
    return last_positive;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw Error("total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

}  // namespace wim
