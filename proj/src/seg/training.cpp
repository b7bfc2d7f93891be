#include "wim/seg/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wim::seg {

namespace {
constexpr std::size_t kPaletteIterations = 10;
}  // namespace

std::vector<SegExample> prepare_examples(const std::vector<const LabeledImage*>& data,
                                         const UnaryPredictor& forest, const GridGraph& graph) {
    std::vector<SegExample> out;
    out.reserve(data.size());
    for (const LabeledImage* li : data) {
        graph.require_shape(li->image);
        graph.require_shape(li->truth);
        out.push_back({li, CrfInput(graph, li->image, forest.predict(li->image))});
    }
    return out;
}

namespace {

Labeling random_labeling(std::size_t w, std::size_t h, std::size_t labels, RngStream& rng) {
    Labeling y(w, h);
    for (auto& l : y.labels) l = static_cast<Label>(rng.below(labels));
    return y;
}

}  // namespace

WarmStartBuffer::WarmStartBuffer(const std::vector<SegExample>& examples, std::size_t labels,
                                 RngStream& rng) {
    states_.resize(examples.size());
    for (std::size_t t = 0; t < examples.size(); ++t) reset(t, examples[t], labels, rng);
}

void WarmStartBuffer::reset(std::size_t t, const SegExample& example, std::size_t labels, RngStream& rng) {
    const Image& x = example.data->image;
    ChainState& s = states_[t];
    s.y_tilde = random_labeling(x.width, x.height, labels, rng);
    s.y_hat = random_labeling(x.width, x.height, labels, rng);
    s.x_tilde = x;
    s.g_tilde.assign(x.size(), 0);
    s.x_tilde_input = example.input;
    s.x_tilde_input.image = &s.x_tilde;
}

SegCrfParams init_crf_from_confusion(const std::vector<SegExample>& examples, std::size_t labels) {
    std::vector<double> counts(labels * labels, 1.0);  // add-one smoothing
    for (const SegExample& ex : examples)
        for (std::size_t i = 0; i < ex.input.unary.size(); ++i)
            counts[ex.data->truth[i] * labels + ex.input.unary[i]] += 1.0;
    SegCrfParams crf(labels);
    for (std::size_t z = 0; z < labels; ++z) {
        double col = 0.0;
        for (std::size_t y = 0; y < labels; ++y) col += counts[y * labels + z];
        for (std::size_t y = 0; y < labels; ++y) crf.q(y, z) = std::log(counts[y * labels + z] / col);
    }
    return crf;
}

GenColorParams init_color_model(const std::vector<SegExample>& examples, std::size_t labels,
                                std::size_t palette, RngStream& rng) {
    if (examples.empty()) throw Error("init_color_model: no examples");
    GenColorParams p(labels, palette);
    std::vector<Color> centres(palette);
    for (auto& c : centres) {
        const SegExample& ex = examples[rng.below(examples.size())];
        c = ex.data->image[rng.below(ex.data->image.size())];
    }
    auto nearest = [&](const Color& x, double& best_d) {
        std::size_t best = 0;
        best_d = std::numeric_limits<double>::max();
        for (std::size_t g = 0; g < palette; ++g) {
            const double d = squared_distance(x, centres[g]);
            if (d < best_d) {
                best_d = d;
                best = g;
            }
        }
        return best;
    };
    for (std::size_t iter = 0; iter < kPaletteIterations; ++iter) {
        std::vector<Color> sum(palette, Color{0.0, 0.0, 0.0});
        std::vector<double> count(palette, 0.0);
        for (const SegExample& ex : examples)
            for (const Color& x : ex.data->image.pixels) {
                double d;
                const std::size_t g = nearest(x, d);
                for (std::size_t ch = 0; ch < 3; ++ch) sum[g][ch] += x[ch];
                count[g] += 1.0;
            }
        for (std::size_t g = 0; g < palette; ++g)
            if (count[g] > 0.0)
                for (std::size_t ch = 0; ch < 3; ++ch) centres[g][ch] = sum[g][ch] / count[g];
    }
    std::vector<double> co(labels * palette, 1.0);
    double spread = 0.0, n = 0.0;
    for (const SegExample& ex : examples)
        for (std::size_t i = 0; i < ex.data->image.size(); ++i) {
            double best_d;
            const std::size_t best = nearest(ex.data->image[i], best_d);
            co[ex.data->truth[i] * palette + best] += 1.0;
            spread += best_d;
            n += 3.0;
        }
    const double variance = std::max(spread / n, 1e-4);
    p.c() = -0.5 / variance;
    for (std::size_t g = 0; g < palette; ++g)
        for (std::size_t ch = 0; ch < 3; ++ch) p.d(g, ch) = -2.0 * p.c() * centres[g][ch];
    for (std::size_t y = 0; y < labels; ++y) {
        double row = 0.0;
        for (std::size_t g = 0; g < palette; ++g) row += co[y * palette + g];
        for (std::size_t g = 0; g < palette; ++g) {
            // h absorbs the colour-dependent part of the Gaussian normaliser
            double sq = 0.0;
            for (std::size_t ch = 0; ch < 3; ++ch) sq += centres[g][ch] * centres[g][ch];
            p.h(y, g) = std::log(co[y * palette + g] / row) + p.c() * sq;
        }
    }
    p.e() = 0.0;
    return p;
}

namespace {

template <class StepFn>
SegTrainResult run_updates(std::size_t n_examples, const TrainConfig& config, RngStream& rng,
                           StepFn&& step) {
    SegTrainResult result;
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        detail::for_each_batch(n_examples, config, rng, epoch,
                               [&](std::span<const std::size_t> idx) { step(idx, step_at(config, t++), result); });
    }
    result.updates = t;
    return result;
}

double agreement(const Labeling& a, const Labeling& b) { return 1.0 - hamming_error(a, b); }

}  // namespace

SegTrainResult train_crf_conditional_likelihood(const std::vector<SegExample>& examples,
                                                const GridGraph& graph, SegCrfParams& crf,
                                                const TrainConfig& config) {
    config.validate();
    if (examples.empty()) throw Error("train_crf_conditional_likelihood: empty dataset");
    RngStream rng(config.seed);
    RngStream init_rng = rng.split(1);
    const RngStream sampling = rng.split(2);
    WarmStartBuffer buffer(examples, crf.labels(), init_rng);
    const double inv_pixels = 1.0 / static_cast<double>(graph.size());
    std::vector<double> epoch_agreement;
    std::size_t update = 0;

    SegTrainResult result = run_updates(examples.size(), config, rng, [&](std::span<const std::size_t> idx,
                                                                          double step, SegTrainResult& res) {
        const CrfKernel kernel(crf, graph);
        std::vector<GradientPair> grads;
        for (std::size_t i : idx) {
            RngStream ex_rng = sampling.split(update * examples.size() + i);
            ChainState& s = buffer[i];
            if (!config.warm_start) buffer.reset(i, examples[i], crf.labels(), ex_rng);
            crf_gibbs_sweep(kernel, examples[i].input, s.y_tilde, ex_rng, config.gibbs_sweeps_per_update);
            s.y_tilde_sweeps += config.gibbs_sweeps_per_update;
            ++s.updates;
            GradientPair g{Vector::Zero(static_cast<Eigen::Index>(crf.dim())), Vector::Zero(0)};
            accumulate_crf_statistics(crf, graph, examples[i].input, examples[i].data->truth, inv_pixels, g.g1);
            accumulate_crf_statistics(crf, graph, examples[i].input, s.y_tilde, -inv_pixels, g.g1);
            grads.push_back(std::move(g));
            epoch_agreement.push_back(agreement(examples[i].data->truth, s.y_tilde));
        }
        ++update;
        const GradientPair inc = batch_update(grads, step, config.clip);
        const Vector next = crf.vector() + inc.g1;
        if (!next.allFinite()) throw DivergenceError("train_crf_conditional_likelihood: non-finite parameters", crf.vector());
        crf.set_vector(next);
        if (epoch_agreement.size() >= examples.size()) {
            double s = 0.0;
            for (double a : epoch_agreement) s += a;
            res.trace.push_back(s / static_cast<double>(epoch_agreement.size()));
            epoch_agreement.clear();
        }
    });
    return result;
}

GradientPair implicit_segmentation_gradient(const SegExample& example, ChainState& s, const GridGraph& graph,
                                            const UnaryPredictor& forest, const SegModelPair& model,
                                            const CrfKernel& kernel, std::size_t sweeps, RngStream& rng) {
    const CrfInput& x_star = example.input;
    const Labeling& y_star = example.data->truth;

    // y~ ~ p(Y | x*)
    crf_gibbs_sweep(kernel, x_star, s.y_tilde, rng, sweeps);
    s.y_tilde_sweeps += sweeps;
    // (x~, g~) ~ p(X, G | y~)
    color_gibbs_sweep(model.color, graph, s.y_tilde, s.x_tilde, s.g_tilde, rng, sweeps);
    s.x_tilde_sweeps += sweeps;
    s.x_tilde_input = CrfInput(graph, s.x_tilde, forest.predict(s.x_tilde));
    // y^ ~ p(Y | x~)
    crf_gibbs_sweep(kernel, s.x_tilde_input, s.y_hat, rng, sweeps);
    s.y_hat_sweeps += sweeps;
    ++s.updates;

    // g* ~ p(G | x*, y~) is exact: colour numbers are independent given x and y
    ColorIndexMap g_star;
    sample_color_numbers(model.color, s.y_tilde, example.data->image, g_star, rng);

    const double w = 1.0 / static_cast<double>(graph.size());
    GradientPair g{Vector::Zero(static_cast<Eigen::Index>(model.crf.dim())),
                   Vector::Zero(static_cast<Eigen::Index>(model.color.dim()))};
    accumulate_crf_statistics(model.crf, graph, s.x_tilde_input, s.y_tilde, w, g.g1);
    accumulate_crf_statistics(model.crf, graph, s.x_tilde_input, s.y_hat, -w, g.g1);
    accumulate_crf_statistics(model.crf, graph, x_star, y_star, w, g.g1);
    accumulate_crf_statistics(model.crf, graph, x_star, s.y_tilde, -w, g.g1);
    accumulate_color_statistics(model.color, graph, example.data->image, s.y_tilde, g_star, w, g.g2);
    accumulate_color_statistics(model.color, graph, s.x_tilde, s.y_tilde, s.g_tilde, -w, g.g2);
    return g;
}

SegTrainResult train_crf_implicit(const std::vector<SegExample>& examples, const GridGraph& graph,
                                  const UnaryPredictor& forest, SegModelPair& model,
                                  const TrainConfig& config, WarmStartBuffer* buffer_out) {
    config.validate();
    if (examples.empty()) throw Error("train_crf_implicit: empty dataset");
    model.color.require_proper();
    RngStream rng(config.seed);
    RngStream init_rng = rng.split(1);
    const RngStream sampling = rng.split(2);
    WarmStartBuffer buffer(examples, model.crf.labels(), init_rng);
    for (std::size_t t = 0; t < buffer.size(); ++t) {
        RngStream g_rng = init_rng.split(t);
        sample_color_numbers(model.color, buffer[t].y_tilde, buffer[t].x_tilde, buffer[t].g_tilde, g_rng);
    }
    std::vector<double> epoch_agreement;
    std::size_t update = 0;

    SegTrainResult result = run_updates(examples.size(), config, rng, [&](std::span<const std::size_t> idx,
                                                                          double step, SegTrainResult& res) {
        const CrfKernel kernel(model.crf, graph);
        std::vector<GradientPair> grads;
        for (std::size_t i : idx) {
            RngStream ex_rng = sampling.split(update * examples.size() + i);
            if (!config.warm_start) {
                buffer.reset(i, examples[i], model.crf.labels(), ex_rng);
                sample_color_numbers(model.color, buffer[i].y_tilde, buffer[i].x_tilde, buffer[i].g_tilde, ex_rng);
            }
            grads.push_back(implicit_segmentation_gradient(examples[i], buffer[i], graph, forest, model, kernel,
                                                           config.gibbs_sweeps_per_update, ex_rng));
            epoch_agreement.push_back(agreement(examples[i].data->truth, buffer[i].y_tilde));
        }
        ++update;
        const GradientPair inc = batch_update(grads, step, config.clip);
        const Vector next1 = model.crf.vector() + inc.g1;
        const Vector next2 = model.color.vector() + inc.g2;
        if (!next1.allFinite() || !next2.allFinite())
            throw DivergenceError("train_crf_implicit: non-finite parameters", model.crf.vector());
        model.crf.set_vector(next1);
        model.color.set_vector(next2);
        if (model.color.project()) ++res.projections;
        if (epoch_agreement.size() >= examples.size()) {
            double s = 0.0;
            for (double a : epoch_agreement) s += a;
            res.trace.push_back(s / static_cast<double>(epoch_agreement.size()));
            epoch_agreement.clear();
        }
    });
    if (buffer_out) *buffer_out = std::move(buffer);
    return result;
}

double segmentation_error(const std::vector<SegExample>& examples, const GridGraph& graph,
                          const SegCrfParams& crf, const DecodeConfig& decode, RngStream& rng,
                          std::vector<Labeling>* decoded_out) {
    if (examples.empty()) return 0.0;
    const CrfKernel kernel(crf, graph);
    double err = 0.0;
    for (std::size_t k = 0; k < examples.size(); ++k) {
        RngStream r = rng.split(k);
        const auto est = max_marginal_decode(kernel, examples[k].input, examples[k].input.unary, r,
                                             decode.burn_in, decode.samples);
        err += hamming_error(examples[k].data->truth, est.decoded);
        if (decoded_out) decoded_out->push_back(est.decoded);
    }
    return err / static_cast<double>(examples.size());
}

double unary_error(const std::vector<SegExample>& examples) {
    if (examples.empty()) return 0.0;
    double err = 0.0;
    for (const SegExample& ex : examples) err += hamming_error(ex.data->truth, ex.input.unary);
    return err / static_cast<double>(examples.size());
}

}  // namespace wim::seg
