#pragma once

#include <concepts>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "wim/prob.hpp"

namespace wim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Conditional distribution p(target | given; theta) in exponential-family
/// form, p ∝ exp<eta(given, target), theta>.
///
/// `accumulate_statistics(g, t, w, acc)` adds w * eta(g, t) into acc; it is
/// the only way statistics leave a model so gradients can be formed without
/// temporaries. `project()` repairs infeasible parameters after an update and
/// reports whether it had to.
template <class M>
concept ExpFamConditional = requires(const M& cm, M& m, const typename M::Given& g,
                                     const typename M::Target& t, RngStream& rng, Vector& acc,
                                     const Vector& theta) {
    typename M::Given;
    typename M::Target;
    { cm.feature_dim() } -> std::convertible_to<std::size_t>;
    { cm.params() } -> std::convertible_to<const Vector&>;
    { m.set_params(theta) };
    { m.project() } -> std::convertible_to<bool>;
    { cm.accumulate_statistics(g, t, 1.0, acc) };
    { cm.log_prob(g, t) } -> std::convertible_to<double>;
    { cm.sample(g, rng) } -> std::convertible_to<typename M::Target>;
};

/// Discrete target space {0, ..., target_size(g) - 1}; log Z is an exact sum.
template <class M>
concept DiscreteTargetConditional =
    ExpFamConditional<M> && std::same_as<typename M::Target, std::size_t> &&
    requires(const M& m, const typename M::Given& g) {
        { m.target_size(g) } -> std::convertible_to<std::size_t>;
    };

template <ExpFamConditional M>
Vector statistics(const M& m, const typename M::Given& g, const typename M::Target& t) {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(m.feature_dim()));
    m.accumulate_statistics(g, t, 1.0, out);
    return out;
}

template <ExpFamConditional M>
double score(const M& m, const typename M::Given& g, const typename M::Target& t) {
    return statistics(m, g, t).dot(m.params());
}

/// <eta(g, t), theta> - log Z(g, theta).
template <ExpFamConditional M>
double exp_fam_log_prob(const M& m, const typename M::Given& g, const typename M::Target& t) {
    return m.log_prob(g, t);
}

template <DiscreteTargetConditional M>
std::vector<double> target_scores(const M& m, const typename M::Given& g) {
    std::vector<double> s(m.target_size(g));
    for (std::size_t t = 0; t < s.size(); ++t) s[t] = score(m, g, t);
    return s;
}

template <DiscreteTargetConditional M>
ProbVector conditional(const M& m, const typename M::Given& g) {
    return normalize(target_scores(m, g));
}

/// E_{p(T|g)}[eta(g, T)] by exhaustive summation.
template <DiscreteTargetConditional M>
Vector expected_statistics(const M& m, const typename M::Given& g) {
    const ProbVector p = conditional(m, g);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(m.feature_dim()));
    for (std::size_t t = 0; t < p.size(); ++t) m.accumulate_statistics(g, t, p[t], out);
    return out;
}

/// One parameter per (given, target) cell: p(t | g) ∝ exp(theta[g, t]).
/// Serves both directions of a toy discrete pair.
class TableConditional {
public:
    using Given = std::size_t;
    using Target = std::size_t;

    TableConditional(std::size_t given_size, std::size_t target_size);
    TableConditional(std::size_t given_size, std::size_t target_size, Vector params);

    std::size_t given_size() const { return given_size_; }
    std::size_t target_size(Given = 0) const { return target_size_; }
    std::size_t feature_dim() const { return given_size_ * target_size_; }

    const Vector& params() const { return params_; }
    void set_params(const Vector& theta);
    bool project() { return false; }

    void accumulate_statistics(Given g, Target t, double w, Vector& acc) const;
    double log_prob(Given g, Target t) const;
    Target sample(Given g, RngStream& rng) const;

    /// Column-stochastic |target| x |given| matrix of p(t | g).
    Matrix table() const;

private:
    std::size_t index(Given g, Target t) const;

    std::size_t given_size_;
    std::size_t target_size_;
    Vector params_;
};

static_assert(DiscreteTargetConditional<TableConditional>);

}  // namespace wim
