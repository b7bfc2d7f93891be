#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "wim/rng.hpp"
#include "wim/seg/grid.hpp"

namespace wim::seg {

struct LabeledImage {
    Image image;
    Labeling truth;
};

/// Synthetic scenes: smooth label regions from thresholded low-frequency
/// noise, each label painted from a small per-label colour mixture with a
/// per-image illumination shift and additive pixel noise.
struct CorpusConfig {
    std::size_t width = 32;
    std::size_t height = 32;
    std::size_t labels = 3;
    std::size_t coarse_grid = 4;       ///< control points per side of the label field
    double pixel_noise = 0.20;         ///< std-dev of additive per-pixel noise
    double illumination_shift = 0.06;  ///< std-dev of per-image, per-label colour offset
    double palette_spread = 0.18;      ///< distance of mixture components from the label colour
};

LabeledImage generate_scene(const CorpusConfig& config, RngStream& rng);
std::vector<LabeledImage> generate_corpus(const CorpusConfig& config, std::size_t count, RngStream& rng);

/// Loads `<dir>/<name>.png` image / `<dir>/<name>_label.png` label-map pairs.
std::vector<LabeledImage> load_corpus(const std::string& dir);

}  // namespace wim::seg
