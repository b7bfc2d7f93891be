#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wim/expfam.hpp"
#include "wim/seg/grid.hpp"

namespace wim::seg {

using ColorIndexMap = std::vector<std::uint8_t>;

/// Generative colour model with a latent colour number g_i per pixel:
///   p(x, g | y) ∝ exp[ sum_i h(y_i, g_i) + c ||x_i||^2 + <d(g_i), x_i>
///                      + e sum_{ij, y_i = y_j} ||x_i - x_j||^2 ]
/// Layout: h (L x G, row-major), c, d (G x 3, row-major), e.
class GenColorParams {
public:
    static constexpr double kMinCurvature = 1e-3;

    GenColorParams(std::size_t labels, std::size_t palette);
    GenColorParams(std::size_t labels, std::size_t palette, Vector theta);

    std::size_t labels() const { return labels_; }
    std::size_t palette() const { return palette_; }
    std::size_t dim() const { return labels_ * palette_ + 3 * palette_ + 2; }
    const Vector& vector() const { return theta_; }
    void set_vector(const Vector& theta);

    std::size_t h_index(std::size_t y, std::size_t g) const { return y * palette_ + g; }
    std::size_t c_index() const { return labels_ * palette_; }
    std::size_t d_index(std::size_t g, std::size_t ch) const { return labels_ * palette_ + 1 + 3 * g + ch; }
    std::size_t e_index() const { return labels_ * palette_ + 1 + 3 * palette_; }

    double h(std::size_t y, std::size_t g) const { return at(h_index(y, g)); }
    double c() const { return at(c_index()); }
    double d(std::size_t g, std::size_t ch) const { return at(d_index(g, ch)); }
    double e() const { return at(e_index()); }
    double& h(std::size_t y, std::size_t g) { return ref(h_index(y, g)); }
    double& c() { return ref(c_index()); }
    double& d(std::size_t g, std::size_t ch) { return ref(d_index(g, ch)); }
    double& e() { return ref(e_index()); }

    /// Throws ImproperDistribution unless c < 0 and e <= 0, which makes every
    /// pixel conditional c + e * (same-label neighbours) strictly negative.
    void require_proper() const;

    /// c <- min(c, -eps), e <- min(e, 0). Returns true if anything changed.
    bool project();

private:
    double at(std::size_t k) const { return theta_[static_cast<Eigen::Index>(k)]; }
    double& ref(std::size_t k) { return theta_[static_cast<Eigen::Index>(k)]; }

    std::size_t labels_;
    std::size_t palette_;
    Vector theta_;
};

/// Draws every g_i from p(g_i | x_i, y_i), which factorizes over pixels.
void sample_color_numbers(const GenColorParams& params, const Labeling& y, const Image& x,
                          ColorIndexMap& g, RngStream& rng);

/// Raster-order sweeps alternating g_i ~ p(g_i | x_i, y_i) and
/// x_i ~ p(x_i | g_i, x_{-i}, y), the latter Gaussian per channel and clamped
/// to [0, 1].
void color_gibbs_sweep(const GenColorParams& params, const GridGraph& graph, const Labeling& y,
                       Image& x, ColorIndexMap& g, RngStream& rng, std::size_t sweeps = 1);

void accumulate_color_statistics(const GenColorParams& params, const GridGraph& graph, const Image& x,
                                 const Labeling& y, const ColorIndexMap& g, double w, Vector& acc);
Vector color_statistics(const GenColorParams& params, const GridGraph& graph, const Image& x,
                        const Labeling& y, const ColorIndexMap& g);

/// Log unnormalized p(x, g | y), evaluated directly from the tables.
double color_energy(const GenColorParams& params, const GridGraph& graph, const Image& x,
                    const Labeling& y, const ColorIndexMap& g);

}  // namespace wim::seg
