#include "wim/seg/crf.hpp"

#include <string>

namespace wim::seg {

SegCrfParams::SegCrfParams(std::size_t labels)
    : SegCrfParams(labels, Vector::Zero(static_cast<Eigen::Index>(9 * labels * labels))) {}

SegCrfParams::SegCrfParams(std::size_t labels, Vector theta) : labels_(labels) {
    if (labels < 1 || labels > 255) throw Error("SegCrfParams: label count must be in [1, 255]");
    set_vector(theta);
}

void SegCrfParams::set_vector(const Vector& theta) {
    if (static_cast<std::size_t>(theta.size()) != dim())
        throw Error("SegCrfParams: expected " + std::to_string(dim()) + " parameters, got " +
                    std::to_string(theta.size()));
    theta_ = theta;
}

CrfInput::CrfInput(const GridGraph& graph, const Image& img, Labeling z)
    : image(&img), unary(std::move(z)), edge_diff(edge_color_differences(graph, img)) {
    graph.require_shape(unary);
}

CrfKernel::CrfKernel(const SegCrfParams& params, const GridGraph& graph)
    : params_(&params), graph_(&graph), labels_(params.labels()),
      sym_a_(kEdgeTypes * labels_ * labels_), sym_b_(kEdgeTypes * labels_ * labels_) {
    for (std::size_t t = 0; t < kEdgeTypes; ++t) {
        const auto et = static_cast<EdgeType>(t);
        for (std::size_t l = 0; l < labels_; ++l)
            for (std::size_t m = 0; m < labels_; ++m) {
                const std::size_t k = (t * labels_ + l) * labels_ + m;
                sym_a_[k] = 0.5 * (params.a(et, l, m) + params.a(et, m, l));
                sym_b_[k] = 0.5 * (params.b(et, l, m) + params.b(et, m, l));
            }
    }
}

void CrfKernel::local_log_weights(const CrfInput& in, const Labeling& y, std::size_t i,
                                  std::span<double> out) const {
    const std::size_t z = in.unary[i];
    for (std::size_t l = 0; l < labels_; ++l) out[l] = params_->q(l, z);
    for (const Neighbor& n : graph_->neighbors(i)) {
        const std::size_t m = y[n.pixel];
        const double diff = in.edge_diff[n.edge];
        for (std::size_t l = 0; l < labels_; ++l) out[l] += sym_a(n.type, l, m) + sym_b(n.type, l, m) * diff;
    }
}

double CrfKernel::energy(const CrfInput& in, const Labeling& y) const {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += params_->q(y[i], in.unary[i]);
    const auto& edges = graph_->edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const Edge& ed = edges[e];
        s += sym_a(ed.type, y[ed.i], y[ed.j]) + sym_b(ed.type, y[ed.i], y[ed.j]) * in.edge_diff[e];
    }
    return s;
}

void crf_gibbs_sweep(const CrfKernel& kernel, const CrfInput& in, Labeling& y, RngStream& rng,
                     std::size_t sweeps) {
    kernel.graph().require_shape(y);
    kernel.graph().require_shape(in.unary);
    std::vector<double> w(kernel.params().labels());
    for (std::size_t s = 0; s < sweeps; ++s)
        for (std::size_t i = 0; i < y.size(); ++i) {
            kernel.local_log_weights(in, y, i, w);
            y[i] = static_cast<Label>(sample_log_weights(w, rng));
        }
}

void accumulate_crf_statistics(const SegCrfParams& params, const GridGraph& graph, const CrfInput& in,
                               const Labeling& y, double w, Vector& acc) {
    graph.require_shape(y);
    for (std::size_t i = 0; i < y.size(); ++i)
        acc[static_cast<Eigen::Index>(params.q_index(y[i], in.unary[i]))] += w;
    const auto& edges = graph.edges();
    const double h = 0.5 * w;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const Edge& ed = edges[e];
        const std::size_t l = y[ed.i], m = y[ed.j];
        const double d = in.edge_diff[e];
        acc[static_cast<Eigen::Index>(params.a_index(ed.type, l, m))] += h;
        acc[static_cast<Eigen::Index>(params.a_index(ed.type, m, l))] += h;
        acc[static_cast<Eigen::Index>(params.b_index(ed.type, l, m))] += h * d;
        acc[static_cast<Eigen::Index>(params.b_index(ed.type, m, l))] += h * d;
    }
}

Vector crf_statistics(const SegCrfParams& params, const GridGraph& graph, const CrfInput& in,
                      const Labeling& y) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(params.dim()));
    accumulate_crf_statistics(params, graph, in, y, 1.0, v);
    return v;
}

Labeling argmax_marginals(std::size_t width, std::size_t height, std::size_t labels,
                          std::span<const double> frequencies) {
    Labeling out(width, height);
    if (frequencies.size() != out.size() * labels) throw Error("argmax_marginals: size mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t l = 1; l < labels; ++l)
            if (frequencies[i * labels + l] > frequencies[i * labels + best]) best = l;
        out[i] = static_cast<Label>(best);
    }
    return out;
}

MarginalEstimate max_marginal_decode(const CrfKernel& kernel, const CrfInput& in, Labeling init,
                                     RngStream& rng, std::size_t burn_in, std::size_t samples) {
    if (samples < 1) throw Error("max_marginal_decode: samples must be >= 1");
    const std::size_t labels = kernel.params().labels();
    crf_gibbs_sweep(kernel, in, init, rng, burn_in);
    std::vector<double> freq(init.size() * labels, 0.0);
    for (std::size_t s = 0; s < samples; ++s) {
        crf_gibbs_sweep(kernel, in, init, rng, 1);
        for (std::size_t i = 0; i < init.size(); ++i) freq[i * labels + init[i]] += 1.0;
    }
    for (double& f : freq) f /= static_cast<double>(samples);
    Labeling decoded = argmax_marginals(init.width, init.height, labels, freq);
    return {std::move(decoded), std::move(freq)};
}

}  // namespace wim::seg
