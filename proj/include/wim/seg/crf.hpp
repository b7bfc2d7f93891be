#pragma once

#include <cstddef>
#include <vector>

#include "wim/expfam.hpp"
#include "wim/seg/grid.hpp"

namespace wim::seg {

/// Parameters of the labeling posterior
///   p(y | x) ∝ exp[ sum_i q(y_i, z_i(x))
///                  + sum_{ij} a_t(y_i, y_j) + b_t(y_i, y_j) ||x_i - x_j||^2 ]
/// stored as one vector: q, then a_0..a_3, then b_0..b_3, each an L x L
/// row-major table. Pairwise tables enter the energy through their symmetric
/// part, so each undirected edge counts a label pair once.
class SegCrfParams {
public:
    explicit SegCrfParams(std::size_t labels);
    SegCrfParams(std::size_t labels, Vector theta);

    std::size_t labels() const { return labels_; }
    std::size_t dim() const { return 9 * labels_ * labels_; }
    const Vector& vector() const { return theta_; }
    void set_vector(const Vector& theta);

    std::size_t q_index(std::size_t y, std::size_t z) const { return y * labels_ + z; }
    std::size_t a_index(EdgeType t, std::size_t l, std::size_t m) const {
        return labels_ * labels_ * (1 + static_cast<std::size_t>(t)) + l * labels_ + m;
    }
    std::size_t b_index(EdgeType t, std::size_t l, std::size_t m) const {
        return labels_ * labels_ * (1 + kEdgeTypes + static_cast<std::size_t>(t)) + l * labels_ + m;
    }
    double q(std::size_t y, std::size_t z) const { return theta_[static_cast<Eigen::Index>(q_index(y, z))]; }
    double a(EdgeType t, std::size_t l, std::size_t m) const {
        return theta_[static_cast<Eigen::Index>(a_index(t, l, m))];
    }
    double b(EdgeType t, std::size_t l, std::size_t m) const {
        return theta_[static_cast<Eigen::Index>(b_index(t, l, m))];
    }
    double& q(std::size_t y, std::size_t z) { return theta_[static_cast<Eigen::Index>(q_index(y, z))]; }
    double& a(EdgeType t, std::size_t l, std::size_t m) {
        return theta_[static_cast<Eigen::Index>(a_index(t, l, m))];
    }
    double& b(EdgeType t, std::size_t l, std::size_t m) {
        return theta_[static_cast<Eigen::Index>(b_index(t, l, m))];
    }

private:
    std::size_t labels_;
    Vector theta_;
};

/// Everything the posterior conditions on: the image, the black-box unary
/// labeling z(x) and the per-edge squared colour differences.
struct CrfInput {
    const Image* image = nullptr;
    Labeling unary;
    std::vector<double> edge_diff;

    CrfInput() = default;
    CrfInput(const GridGraph& graph, const Image& image, Labeling unary);
};

/// Precomputed symmetric pairwise tables for fast local conditionals.
class CrfKernel {
public:
    CrfKernel(const SegCrfParams& params, const GridGraph& graph);

    const SegCrfParams& params() const { return *params_; }
    const GridGraph& graph() const { return *graph_; }

    /// Unnormalized log p(y_i = l | y_{-i}, x) for all l.
    void local_log_weights(const CrfInput& in, const Labeling& y, std::size_t i, std::span<double> out) const;

    /// Log unnormalized posterior of a full labeling.
    double energy(const CrfInput& in, const Labeling& y) const;

private:
    double sym_a(EdgeType t, std::size_t l, std::size_t m) const {
        return sym_a_[(static_cast<std::size_t>(t) * labels_ + l) * labels_ + m];
    }
    double sym_b(EdgeType t, std::size_t l, std::size_t m) const {
        return sym_b_[(static_cast<std::size_t>(t) * labels_ + l) * labels_ + m];
    }

    const SegCrfParams* params_;
    const GridGraph* graph_;
    std::size_t labels_;
    std::vector<double> sym_a_;
    std::vector<double> sym_b_;
};

/// Raster-order single-site Gibbs sweeps of the labeling posterior.
void crf_gibbs_sweep(const CrfKernel& kernel, const CrfInput& in, Labeling& y, RngStream& rng,
                     std::size_t sweeps = 1);

/// Posterior sufficient statistics: <crf_statistics, params> equals the
/// log unnormalized posterior of y.
void accumulate_crf_statistics(const SegCrfParams& params, const GridGraph& graph, const CrfInput& in,
                               const Labeling& y, double w, Vector& acc);
Vector crf_statistics(const SegCrfParams& params, const GridGraph& graph, const CrfInput& in,
                      const Labeling& y);

struct MarginalEstimate {
    Labeling decoded;
    std::vector<double> frequencies;  ///< pixel-major, labels() entries per pixel
};

/// Per-pixel argmax of a frequency table (pixel-major); ties to the smallest label.
Labeling argmax_marginals(std::size_t width, std::size_t height, std::size_t labels,
                          std::span<const double> frequencies);

/// Gibbs chain started at `init`: `burn_in` discarded sweeps, then per-pixel
/// label frequencies over `samples` sweeps, decoded per pixel.
MarginalEstimate max_marginal_decode(const CrfKernel& kernel, const CrfInput& in, Labeling init,
                                     RngStream& rng, std::size_t burn_in, std::size_t samples);

}  // namespace wim::seg
