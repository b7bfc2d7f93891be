#include "wim/seg/color_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wim::seg {

GenColorParams::GenColorParams(std::size_t labels, std::size_t palette)
    : labels_(labels), palette_(palette) {
    if (labels < 1 || palette < 1 || palette > 255) throw Error("GenColorParams: bad sizes");
    theta_ = Vector::Zero(static_cast<Eigen::Index>(dim()));
    c() = -0.5;
}

GenColorParams::GenColorParams(std::size_t labels, std::size_t palette, Vector theta)
    : labels_(labels), palette_(palette) {
    if (labels < 1 || palette < 1 || palette > 255) throw Error("GenColorParams: bad sizes");
    set_vector(theta);
}

void GenColorParams::set_vector(const Vector& theta) {
    if (static_cast<std::size_t>(theta.size()) != dim())
        throw Error("GenColorParams: expected " + std::to_string(dim()) + " parameters, got " +
                    std::to_string(theta.size()));
    theta_ = theta;
}

void GenColorParams::require_proper() const {
    if (!(c() < 0.0)) throw ImproperDistribution("colour curvature c = " + std::to_string(c()) + " must be < 0");
    if (!(e() <= 0.0)) throw ImproperDistribution("smoothness e = " + std::to_string(e()) + " must be <= 0");
}

bool GenColorParams::project() {
    bool changed = false;
    if (c() > -kMinCurvature) {
        c() = -kMinCurvature;
        changed = true;
    }
    if (e() > 0.0) {
        e() = 0.0;
        changed = true;
    }
    return changed;
}

namespace {

void require_shapes(const GenColorParams& params, const GridGraph& graph, const Labeling& y,
                    const Image& x, const ColorIndexMap& g) {
    graph.require_shape(y);
    graph.require_shape(x);
    if (g.size() != graph.size()) throw Error("colour model: colour-number map has wrong size");
    for (Label l : y.labels)
        if (l >= params.labels()) throw Error("colour model: label out of range");
}

std::uint8_t draw_color_number(const GenColorParams& params, std::size_t y, const Color& x,
                               std::vector<double>& w, RngStream& rng) {
    for (std::size_t k = 0; k < params.palette(); ++k)
        w[k] = params.h(y, k) + params.d(k, 0) * x[0] + params.d(k, 1) * x[1] + params.d(k, 2) * x[2];
    return static_cast<std::uint8_t>(sample_log_weights(w, rng));
}

}  // namespace

void sample_color_numbers(const GenColorParams& params, const Labeling& y, const Image& x,
                          ColorIndexMap& g, RngStream& rng) {
    if (y.size() != x.size()) throw Error("colour model: dimension mismatch");
    g.resize(x.size());
    std::vector<double> w(params.palette());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = draw_color_number(params, y[i], x[i], w, rng);
}

void color_gibbs_sweep(const GenColorParams& params, const GridGraph& graph, const Labeling& y,
                       Image& x, ColorIndexMap& g, RngStream& rng, std::size_t sweeps) {
    params.require_proper();
    require_shapes(params, graph, y, x, g);
    std::vector<double> w(params.palette());
    const double c = params.c();
    const double e = params.e();
    for (std::size_t s = 0; s < sweeps; ++s)
        for (std::size_t i = 0; i < x.size(); ++i) {
            g[i] = draw_color_number(params, y[i], x[i], w, rng);
            // exponent: (c + e n) ||x_i||^2 + <d(g_i) - 2 e sum_j x_j, x_i>
            double n = 0.0;
            Color pull{0.0, 0.0, 0.0};
            for (const Neighbor& nb : graph.neighbors(i)) {
                if (y[nb.pixel] != y[i]) continue;
                n += 1.0;
                for (std::size_t ch = 0; ch < 3; ++ch) pull[ch] += x[nb.pixel][ch];
            }
            const double quad = c + e * n;
            const double sd = std::sqrt(-0.5 / quad);
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const double lin = params.d(g[i], ch) - 2.0 * e * pull[ch];
                const double mean = -lin / (2.0 * quad);
                x[i][ch] = std::clamp(mean + sd * rng.normal(), 0.0, 1.0);
            }
        }
}

void accumulate_color_statistics(const GenColorParams& params, const GridGraph& graph, const Image& x,
                                 const Labeling& y, const ColorIndexMap& g, double w, Vector& acc) {
    require_shapes(params, graph, y, x, g);
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc[static_cast<Eigen::Index>(params.h_index(y[i], g[i]))] += w;
        sq += squared_norm(x[i]);
        for (std::size_t ch = 0; ch < 3; ++ch)
            acc[static_cast<Eigen::Index>(params.d_index(g[i], ch))] += w * x[i][ch];
    }
    acc[static_cast<Eigen::Index>(params.c_index())] += w * sq;
    double smooth = 0.0;
    for (const Edge& ed : graph.edges())
        if (y[ed.i] == y[ed.j]) smooth += squared_distance(x[ed.i], x[ed.j]);
    acc[static_cast<Eigen::Index>(params.e_index())] += w * smooth;
}

Vector color_statistics(const GenColorParams& params, const GridGraph& graph, const Image& x,
                        const Labeling& y, const ColorIndexMap& g) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(params.dim()));
    accumulate_color_statistics(params, graph, x, y, g, 1.0, v);
    return v;
}

double color_energy(const GenColorParams& params, const GridGraph& graph, const Image& x,
                    const Labeling& y, const ColorIndexMap& g) {
    require_shapes(params, graph, y, x, g);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += params.h(y[i], g[i]) + params.c() * squared_norm(x[i]);
        for (std::size_t ch = 0; ch < 3; ++ch) s += params.d(g[i], ch) * x[i][ch];
    }
    for (const Edge& ed : graph.edges())
        if (y[ed.i] == y[ed.j]) s += params.e() * squared_distance(x[ed.i], x[ed.j]);
    return s;
}

}  // namespace wim::seg
