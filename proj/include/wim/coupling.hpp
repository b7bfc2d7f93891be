#pragma once

#include <cstddef>
#include <vector>

#include "wim/expfam.hpp"

namespace wim {

/// A pair of discrete conditionals in matrix form.
/// posterior: |Y| x |X|, column x holds p(. | x).
/// likelihood: |X| x |Y|, column y holds p(. | y).
class DiscreteConditionalPair {
public:
    DiscreteConditionalPair(Matrix posterior, Matrix likelihood, double tol = kTolerances.normalization);

    /// Both conditionals of a strictly positive joint (rows = x, cols = y).
    static DiscreteConditionalPair from_joint(const Matrix& joint);

    const Matrix& posterior() const { return a_; }
    const Matrix& likelihood() const { return b_; }
    std::size_t x_size() const { return static_cast<std::size_t>(b_.rows()); }
    std::size_t y_size() const { return static_cast<std::size_t>(a_.rows()); }

    /// Transition matrix of the observation chain x -> y -> x'.
    Matrix x_transition() const { return b_ * a_; }
    /// Transition matrix of the label chain y -> x -> y'.
    Matrix y_transition() const { return a_ * b_; }

private:
    Matrix a_;
    Matrix b_;
};

struct StationaryMarginals {
    ProbVector px;
    ProbVector py;
    std::size_t iterations = 0;
    double residual = 0.0;  ///< ||C px - px||_inf at exit
};

enum class PositivityCheck { strict, relaxed };

/// Marginals px, py with py = A px and px = B py, by power iteration on
/// C = B A from the uniform vector. In strict mode every entry of C must be
/// positive; relaxed mode accepts any C for which the iteration converges.
StationaryMarginals stationary_marginals(const DiscreteConditionalPair& pair, double tol = 1e-13,
                                         std::size_t max_iter = 100000,
                                         PositivityCheck check = PositivityCheck::strict);

struct StrongImplicitCheck {
    bool holds = false;
    double max_residual = 0.0;
};

/// max over (x, y) of |px[x] A[y, x] - py[y] B[x, y]|.
StrongImplicitCheck check_strong_implicit(const DiscreteConditionalPair& pair, const ProbVector& px,
                                          const ProbVector& py, double tol);

/// max(||py - A px||_inf, ||px - B py||_inf).
double weak_implicit_residual(const DiscreteConditionalPair& pair, const ProbVector& px,
                              const ProbVector& py);

/// The joint px[x] * A[y, x] as an |X| x |Y| matrix.
Matrix implied_joint(const DiscreteConditionalPair& pair, const ProbVector& px);

/// Likelihood table p(x | y) ∝ exp(alpha * E(x, y) + E(x)) as an |X| x |Y|
/// column-stochastic matrix. alpha = 0 makes it independent of y; large
/// alpha concentrates each column on argmax_x E(x, y).
Matrix weakness_likelihood(const Matrix& energy_xy, const Vector& energy_x, double alpha);

enum class ChainDirection { forward, reverse };

/// Alternating observation/label sequence. For a reverse chain the anchor is
/// observations()[0] = x*, followed by labels()[0], observations()[1], ...
/// so the element order is x*, y~, x~, y^, ...
template <class X, class Y>
class Chain {
public:
    Chain(ChainDirection direction, X anchor) : direction_(direction) {
        observations_.push_back(std::move(anchor));
    }

    ChainDirection direction() const { return direction_; }
    const X& anchor() const { return observations_.front(); }
    const std::vector<X>& observations() const { return observations_; }
    const std::vector<Y>& labels() const { return labels_; }
    std::size_t size() const { return observations_.size() + labels_.size(); }
    bool next_is_label() const { return labels_.size() < observations_.size(); }

    void push_label(Y y) {
        if (!next_is_label()) throw Error("chain: expected an observation");
        labels_.push_back(std::move(y));
    }
    void push_observation(X x) {
        if (next_is_label()) throw Error("chain: expected a label");
        observations_.push_back(std::move(x));
    }

private:
    ChainDirection direction_;
    std::vector<X> observations_;
    std::vector<Y> labels_;
};

/// Samples `steps` elements after x*, alternating y ~ p(Y | x; posterior)
/// and x ~ p(X | y; likelihood). steps = 3 yields (x*, y~, x~, y^).
template <ExpFamConditional Post, ExpFamConditional Lik>
    requires std::same_as<typename Post::Given, typename Lik::Target> &&
             std::same_as<typename Post::Target, typename Lik::Given>
Chain<typename Post::Given, typename Post::Target> sample_reverse_chain(
    const Post& posterior, const Lik& likelihood, const typename Post::Given& x_star,
    std::size_t steps, RngStream& rng) {
    if (steps < 1) throw Error("sample_reverse_chain: steps must be >= 1");
    Chain<typename Post::Given, typename Post::Target> chain(ChainDirection::reverse, x_star);
    for (std::size_t k = 0; k < steps; ++k) {
        if (chain.next_is_label())
            chain.push_label(posterior.sample(chain.observations().back(), rng));
        else
            chain.push_observation(likelihood.sample(chain.labels().back(), rng));
    }
    return chain;
}

/// Forward simulation x0, y0, x1, ... for `transitions` x -> x steps; returns x_n.
std::size_t simulate_observation_chain(const DiscreteConditionalPair& pair, std::size_t x0,
                                       std::size_t transitions, RngStream& rng);

}  // namespace wim
