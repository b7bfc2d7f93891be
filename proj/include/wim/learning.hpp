#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wim/coupling.hpp"
#include "wim/expfam.hpp"

namespace wim {

enum class StepSchedule { constant, inverse_t, inverse_sqrt_t };

struct TrainConfig {
    double step_size = 0.05;
    StepSchedule schedule = StepSchedule::constant;
    double decay_offset = 100.0;  ///< tau in lambda * tau / (tau + t)
    double step_floor = 0.0;      ///< lower bound for decayed steps
    std::size_t epochs = 200;
    std::size_t batch_size = 1;
    double l2_weight = 0.0;       ///< conditional-likelihood baseline only
    std::uint64_t seed = 0;
    std::size_t gibbs_sweeps_per_update = 1;
    bool warm_start = true;
    double clip = 10.0;           ///< infinity-norm bound per batch update; 0 disables
    std::size_t chain_steps = 3;  ///< elements sampled after x*; odd, >= 3

    void validate() const;
};

/// Step size for update number `t` (0-based).
double step_at(const TrainConfig& config, std::size_t t);

/// Rescales `g` so that its infinity norm is at most `bound` (no-op if bound <= 0).
void clip_inf_norm(Vector& g, double bound);

/// l2_weight presets for the regularized baseline; frozen after tuning.
inline constexpr double kWeakL2 = 1e-3;
inline constexpr double kStrongL2 = 1e-1;

template <class X, class Y>
struct Example {
    X x;
    Y y;
};

template <class X, class Y>
using Dataset = std::vector<Example<X, Y>>;

struct GradientPair {
    Vector g1;  ///< posterior increment
    Vector g2;  ///< likelihood increment
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, Vector last_finite)
        : Error(what), last_finite_(std::move(last_finite)) {}
    const Vector& last_finite() const { return last_finite_; }

private:
    Vector last_finite_;
};

struct TrainResult {
    Vector theta1;
    Vector theta2;                   ///< empty for the conditional-likelihood baseline
    std::vector<double> trace;       ///< per-epoch mean conditional log-likelihood
    std::size_t projections = 0;     ///< updates that needed a feasibility repair
    std::size_t updates = 0;
};

/// Statistics of a chain (x*, y0, x1, y1, ..., xk, yk) sampled in reverse from
/// x*, plus the data pair (x*, y*):
///   g1 = eta1(x*, y*) - eta1(x*, y0) + sum_i [eta1(x_i, y_{i-1}) - eta1(x_i, y_i)]
///   g2 = sum_i [eta2(y_i -> x_i) - eta2(y_i -> x_{i+1})]
/// With k = 1 this is exactly the two-line update of the algorithm.
template <ExpFamConditional Post, ExpFamConditional Lik>
GradientPair chain_gradient(const Post& posterior, const Lik& likelihood,
                            const Chain<typename Post::Given, typename Post::Target>& chain,
                            const typename Post::Target& y_star) {
    const auto& xs = chain.observations();
    const auto& ys = chain.labels();
    if (xs.size() != ys.size() || ys.empty())
        throw Error("chain_gradient: chain must end with a label");
    GradientPair g{Vector::Zero(static_cast<Eigen::Index>(posterior.feature_dim())),
                   Vector::Zero(static_cast<Eigen::Index>(likelihood.feature_dim()))};
    posterior.accumulate_statistics(xs[0], y_star, 1.0, g.g1);
    posterior.accumulate_statistics(xs[0], ys[0], -1.0, g.g1);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        posterior.accumulate_statistics(xs[i], ys[i - 1], 1.0, g.g1);
        posterior.accumulate_statistics(xs[i], ys[i], -1.0, g.g1);
        likelihood.accumulate_statistics(ys[i - 1], xs[i - 1], 1.0, g.g2);
        likelihood.accumulate_statistics(ys[i - 1], xs[i], -1.0, g.g2);
    }
    return g;
}

/// One stochastic gradient of the joint log-likelihood for a single example:
/// sample y~ ~ p(Y|x*), x~ ~ p(X|y~), y^ ~ p(Y|x~) and difference their
/// sufficient statistics.
template <ExpFamConditional Post, ExpFamConditional Lik>
GradientPair implicit_sgd_step(const Post& posterior, const Lik& likelihood,
                               const typename Post::Given& x_star,
                               const typename Post::Target& y_star, RngStream& rng,
                               std::size_t chain_steps = 3) {
    const auto chain = sample_reverse_chain(posterior, likelihood, x_star, chain_steps, rng);
    GradientPair g = chain_gradient(posterior, likelihood, chain, y_star);
#ifndef NDEBUG
    if (chain_steps == 3) {
        const auto& xs = chain.observations();
        const auto& ys = chain.labels();
        const Vector ref1 = (statistics(posterior, xs[1], ys[0]) - statistics(posterior, xs[1], ys[1])) +
                            (statistics(posterior, xs[0], y_star) - statistics(posterior, xs[0], ys[0]));
        const Vector ref2 = statistics(likelihood, ys[0], xs[0]) - statistics(likelihood, ys[0], xs[1]);
        assert((ref1 - g.g1).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + ref1.cwiseAbs().maxCoeff()));
        assert((ref2 - g.g2).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + ref2.cwiseAbs().maxCoeff()));
    }
#endif
    return g;
}

/// eta(x, y) - E_{p(Y|x)}[eta(x, Y)], exact for discrete labels.
template <DiscreteTargetConditional Post>
Vector cl_gradient(const Post& posterior, const typename Post::Given& x, std::size_t y) {
    return statistics(posterior, x, y) - expected_statistics(posterior, x);
}

template <DiscreteTargetConditional Post>
double mean_conditional_log_likelihood(const Post& posterior,
                                       const Dataset<typename Post::Given, std::size_t>& data) {
    double s = 0.0;
    for (const auto& ex : data) s += posterior.log_prob(ex.x, ex.y);
    return s / static_cast<double>(data.size());
}

namespace detail {

/// Visits the dataset in batches; the order is reshuffled every epoch unless
/// a batch covers the whole set.
template <class F>
void for_each_batch(std::size_t n, const TrainConfig& config, RngStream& rng, std::size_t epoch,
                    F&& f) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.batch_size < n) {
        RngStream shuffle = rng.split(epoch);
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    }
    for (std::size_t start = 0; start < n; start += config.batch_size) {
        const std::size_t stop = std::min(n, start + config.batch_size);
        f(std::span<const std::size_t>(order.data() + start, stop - start));
    }
}

inline bool finite(const Vector& v) { return v.allFinite(); }

}  // namespace detail

/// theta += step * clip(mean(g)), returned as the applied increments.
GradientPair batch_update(std::span<const GradientPair> grads, double step, double clip);

/// Gradient ascent on mean_t log p(y_t | x_t) - l2_weight * ||theta||^2.
template <DiscreteTargetConditional Post>
TrainResult train_conditional_likelihood(const Dataset<typename Post::Given, std::size_t>& data,
                                         Post& posterior, const TrainConfig& config) {
    config.validate();
    if (data.empty()) throw Error("train_conditional_likelihood: empty dataset");
    RngStream rng(config.seed);
    TrainResult result;
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        detail::for_each_batch(data.size(), config, rng, epoch, [&](std::span<const std::size_t> idx) {
            Vector g = Vector::Zero(static_cast<Eigen::Index>(posterior.feature_dim()));
            for (std::size_t i : idx) g += cl_gradient(posterior, data[i].x, data[i].y);
            g /= static_cast<double>(idx.size());
            g -= 2.0 * config.l2_weight * posterior.params();
            clip_inf_norm(g, config.clip);
            const Vector previous = posterior.params();
            Vector next = previous + step_at(config, t++) * g;
            if (!detail::finite(next))
                throw DivergenceError("train_conditional_likelihood: non-finite parameters", previous);
            posterior.set_params(next);
            if (posterior.project()) ++result.projections;
        });
        const double objective = mean_conditional_log_likelihood(posterior, data) -
                                 config.l2_weight * posterior.params().squaredNorm();
        if (std::isnan(objective))
            throw DivergenceError("train_conditional_likelihood: objective is NaN", posterior.params());
        result.trace.push_back(objective);
    }
    result.theta1 = posterior.params();
    result.updates = t;
    return result;
}

/// Stochastic ascent on the joint log-likelihood of an implicit model: every
/// example contributes one reverse-chain gradient pair per epoch; pairs are
/// averaged within a batch.
template <DiscreteTargetConditional Post, ExpFamConditional Lik>
    requires std::same_as<typename Post::Given, typename Lik::Target> &&
             std::same_as<typename Post::Target, typename Lik::Given>
TrainResult train_implicit(const Dataset<typename Post::Given, std::size_t>& data, Post& posterior,
                           Lik& likelihood, const TrainConfig& config) {
    config.validate();
    if (data.empty()) throw Error("train_implicit: empty dataset");
    RngStream rng(config.seed);
    const RngStream sampling = rng.split(0x5A3D1E);
    TrainResult result;
    std::vector<GradientPair> grads;
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        detail::for_each_batch(data.size(), config, rng, epoch, [&](std::span<const std::size_t> idx) {
            grads.clear();
            for (std::size_t i : idx) {
                RngStream ex_rng = sampling.split(t * data.size() + i);
                grads.push_back(implicit_sgd_step(posterior, likelihood, data[i].x, data[i].y, ex_rng,
                                                  config.chain_steps));
            }
            const Vector prev1 = posterior.params();
            const Vector prev2 = likelihood.params();
            const GradientPair inc = batch_update(grads, step_at(config, t++), config.clip);
            const Vector next1 = prev1 + inc.g1;
            const Vector next2 = prev2 + inc.g2;
            if (!detail::finite(next1) || !detail::finite(next2))
                throw DivergenceError("train_implicit: non-finite parameters", prev1);
            posterior.set_params(next1);
            likelihood.set_params(next2);
            const bool p1 = posterior.project();
            const bool p2 = likelihood.project();
            if (p1 || p2) ++result.projections;
        });
        result.trace.push_back(mean_conditional_log_likelihood(posterior, data));
    }
    result.theta1 = posterior.params();
    result.theta2 = likelihood.params();
    result.updates = t;
    return result;
}

}  // namespace wim
