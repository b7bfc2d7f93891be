#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "wim/coupling.hpp"
#include "wim/expfam.hpp"
#include "wim/learning.hpp"
#include "wim/seg/crf.hpp"
#include "wim/synthetic.hpp"

namespace wim::oracle {

/// Small discrete implicit model with one parameter per table cell.
/// posterior: p(y | x), likelihood: p(x | y).
class ToyDiscreteModel {
public:
    static constexpr std::size_t kMaxSize = 8;

    ToyDiscreteModel(std::size_t x_size, std::size_t y_size);
    ToyDiscreteModel(TableConditional posterior, TableConditional likelihood);

    /// Parameters drawn i.i.d. N(0, scale^2).
    static ToyDiscreteModel random(std::size_t x_size, std::size_t y_size, double scale, RngStream& rng);

    std::size_t x_size() const { return posterior_.given_size(); }
    std::size_t y_size() const { return posterior_.target_size(); }
    const TableConditional& posterior() const { return posterior_; }
    const TableConditional& likelihood() const { return likelihood_; }
    TableConditional& posterior() { return posterior_; }
    TableConditional& likelihood() { return likelihood_; }

    DiscreteConditionalPair pair() const;

private:
    TableConditional posterior_;
    TableConditional likelihood_;
};

/// Exact gradient of log sum_z p(z, x*) over chains
/// (x0, y0, ..., x_{n-1}, y_{n-1}, x*) with p(x0) uniform.
struct ExactChainGradient {
    GradientPair total;
    double log_marginal = 0.0;
    /// Contributions indexed by distance from x*: g1_terms[k] belongs to the
    /// pair (x_{n-1-k}, y_{n-1-k}), g2_terms[k] to the transition into x_{n-k}.
    std::vector<Vector> g1_terms;
    std::vector<Vector> g2_terms;
};

inline constexpr std::size_t kEnumerationBudget = 1u << 22;

ExactChainGradient exact_chain_gradient(const ToyDiscreteModel& model, std::size_t x_star, std::size_t n);

/// log sum_z p(z, x*) for the same chain family, by direct summation.
double chain_log_marginal(const ToyDiscreteModel& model, std::size_t x_star, std::size_t n);

/// Expectation of the single-example implicit update over
/// y~ ~ p(Y | x*), x~ ~ p(X | y~), y^ ~ p(Y | x~), by triple enumeration.
GradientPair exact_implicit_step_expectation(const ToyDiscreteModel& model, std::size_t x_star,
                                             std::size_t y_star);

struct DenseStationary {
    ProbVector px;
    ProbVector py;
};

/// Eigenvalue-1 eigenvector of B A from a full eigendecomposition.
DenseStationary dense_stationary(const DiscreteConditionalPair& pair);

struct GridEnumeration {
    std::vector<double> marginals;  ///< pixel-major, labels entries per pixel
    double log_partition = 0.0;
    std::vector<double> log_weights;  ///< per labeling, index = sum_i y_i L^i
};

inline constexpr std::size_t kGridStateBudget = 81;

/// Exhaustive sum over labelings of the grid posterior. Edges and energies are
/// rebuilt from the parameter tables without the production kernel.
GridEnumeration enumerate_grid(const seg::SegCrfParams& params, const seg::Image& image,
                               const seg::Labeling& unary);

/// Labeling with index k in the enumeration order of enumerate_grid.
seg::Labeling grid_state(std::size_t width, std::size_t height, std::size_t labels, std::size_t k);

/// 1 - integral of max_y p(y) N(x; mu_y, sigma_y) with uniform class prior.
double bayes_error_numeric(const synthetic::GeneratorConfig& generator);

/// Adaptive Simpson quadrature with the given local tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

/// Central differences of f at theta with step h.
Vector central_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                                   double h = 1e-5);

/// max_k |a_k - b_k| / max(1, max_k |b_k|).
double relative_error(const Vector& a, const Vector& b);

}  // namespace wim::oracle
