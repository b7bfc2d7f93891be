#include "wim/expfam.hpp"

#include <string>

namespace wim {

TableConditional::TableConditional(std::size_t given_size, std::size_t target_size)
    : TableConditional(given_size, target_size,
                       Vector::Zero(static_cast<Eigen::Index>(given_size * target_size))) {}

TableConditional::TableConditional(std::size_t given_size, std::size_t target_size, Vector params)
    : given_size_(given_size), target_size_(target_size) {
    if (given_size == 0 || target_size == 0) throw Error("TableConditional: empty space");
    set_params(params);
}

void TableConditional::set_params(const Vector& theta) {
    if (static_cast<std::size_t>(theta.size()) != feature_dim())
        throw Error("TableConditional: expected " + std::to_string(feature_dim()) +
                    " parameters, got " + std::to_string(theta.size()));
    params_ = theta;
}

std::size_t TableConditional::index(Given g, Target t) const {
    if (g >= given_size_ || t >= target_size_) throw Error("TableConditional: index out of range");
    return g * target_size_ + t;
}

void TableConditional::accumulate_statistics(Given g, Target t, double w, Vector& acc) const {
    acc[static_cast<Eigen::Index>(index(g, t))] += w;
}

double TableConditional::log_prob(Given g, Target t) const {
    const auto row = params_.segment(static_cast<Eigen::Index>(g * target_size_),
                                     static_cast<Eigen::Index>(target_size_));
    return params_[static_cast<Eigen::Index>(index(g, t))] -
           log_sum_exp(std::span<const double>(row.data(), target_size_));
}

TableConditional::Target TableConditional::sample(Given g, RngStream& rng) const {
    if (g >= given_size_) throw Error("TableConditional: index out of range");
    const double* row = params_.data() + g * target_size_;
    return sample_log_weights(std::span<const double>(row, target_size_), rng);
}

Matrix TableConditional::table() const {
    Matrix m(static_cast<Eigen::Index>(target_size_), static_cast<Eigen::Index>(given_size_));
    for (std::size_t g = 0; g < given_size_; ++g) {
        const ProbVector p = normalize(std::span<const double>(params_.data() + g * target_size_, target_size_));
        for (std::size_t t = 0; t < target_size_; ++t)
            m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(g)) = p[t];
    }
    return m;
}

}  // namespace wim
