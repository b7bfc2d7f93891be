#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "wim/learning.hpp"
#include "wim/seg/color_model.hpp"
#include "wim/seg/corpus.hpp"
#include "wim/seg/crf.hpp"
#include "wim/seg/forest.hpp"

namespace wim::seg {

/// Labeling posterior and generative colour model trained together.
struct SegModelPair {
    SegCrfParams crf;
    GenColorParams color;
};

/// A training example with its unary prediction and edge differences cached.
struct SegExample {
    const LabeledImage* data = nullptr;
    CrfInput input;
};

std::vector<SegExample> prepare_examples(const std::vector<const LabeledImage*>& data,
                                         const UnaryPredictor& forest, const GridGraph& graph);

/// Persistent chain state of one training example: y~ sampled given x*,
/// (x~, g~) sampled given y~, y^ sampled given x~.
struct ChainState {
    Labeling y_tilde;
    Image x_tilde;
    ColorIndexMap g_tilde;
    Labeling y_hat;
    CrfInput x_tilde_input;  ///< unary and edge differences of x~
    std::size_t y_tilde_sweeps = 0;
    std::size_t x_tilde_sweeps = 0;
    std::size_t y_hat_sweeps = 0;
    std::size_t updates = 0;
};

/// Per-example chains reused across gradient updates. Labelings start
/// uniformly random and x~ starts at the training image.
class WarmStartBuffer {
public:
    WarmStartBuffer(const std::vector<SegExample>& examples, std::size_t labels, RngStream& rng);

    std::size_t size() const { return states_.size(); }
    ChainState& operator[](std::size_t t) { return states_[t]; }
    const ChainState& operator[](std::size_t t) const { return states_[t]; }

    /// Resets entry t to its initial state (used when warm starts are disabled).
    void reset(std::size_t t, const SegExample& example, std::size_t labels, RngStream& rng);

private:
    std::vector<ChainState> states_;
};

/// q(y, z) = log of the smoothed confusion frequency p(y | z) of the forest
/// on the training set; pairwise tables zero.
SegCrfParams init_crf_from_confusion(const std::vector<SegExample>& examples, std::size_t labels);

/// Colour model initialised from the training pixels: palette centres are
/// seeded pixel draws, c matches the pooled spread, h holds log
/// co-occurrence frequencies of (label, nearest centre), e = 0.
GenColorParams init_color_model(const std::vector<SegExample>& examples, std::size_t labels,
                                std::size_t palette, RngStream& rng);

struct SegTrainResult {
    std::size_t updates = 0;
    std::size_t projections = 0;
    std::vector<double> trace;  ///< per-epoch mean per-pixel agreement of y~ with y*
};

/// Conditional likelihood: g1 = eta1(x*, y*) - eta1(x*, y~) with y~ from a
/// warm-started Gibbs chain of p(Y | x*).
SegTrainResult train_crf_conditional_likelihood(const std::vector<SegExample>& examples,
                                                const GridGraph& graph, SegCrfParams& crf,
                                                const TrainConfig& config);

/// Implicit learning; every sampling step is a Gibbs sweep continued from the
/// previous update's state. The generated x~ is passed through `forest` to
/// obtain its unary labeling.
SegTrainResult train_crf_implicit(const std::vector<SegExample>& examples, const GridGraph& graph,
                                  const UnaryPredictor& forest, SegModelPair& model,
                                  const TrainConfig& config, WarmStartBuffer* buffer_out = nullptr);

/// One implicit update for example t: advances its chains and returns the
/// per-pixel gradient pair (not yet applied).
GradientPair implicit_segmentation_gradient(const SegExample& example, ChainState& state,
                                            const GridGraph& graph, const UnaryPredictor& forest,
                                            const SegModelPair& model, const CrfKernel& kernel,
                                            std::size_t sweeps, RngStream& rng);

struct DecodeConfig {
    std::size_t burn_in = 20;
    std::size_t samples = 60;
};

/// Mean Hamming error of max-marginal decoding started at the unary labeling.
double segmentation_error(const std::vector<SegExample>& examples, const GridGraph& graph,
                          const SegCrfParams& crf, const DecodeConfig& decode, RngStream& rng,
                          std::vector<Labeling>* decoded_out = nullptr);

/// Mean Hamming error of the forest alone.
double unary_error(const std::vector<SegExample>& examples);

}  // namespace wim::seg
