#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "wim/rng.hpp"
#include "wim/seg/grid.hpp"

namespace wim::seg {

inline constexpr std::size_t kPixelFeatures = 9;
using PixelFeatures = std::array<float, kPixelFeatures>;

/// RGB, 3x3 neighbourhood mean and 3x3 neighbourhood variance per pixel.
std::vector<PixelFeatures> pixel_features(const Image& image);

struct ForestConfig {
    std::size_t trees = 16;
    std::size_t max_depth = 10;
    std::size_t min_leaf = 2;
    std::size_t features_per_split = 3;
    std::size_t thresholds_per_feature = 8;
    std::size_t max_samples_per_tree = 4096;  ///< bootstrap size cap
};

/// Pixel-wise independent random forest over pixel_features(). Prediction is
/// the majority vote of the trees' leaf labels, ties to the smallest label.
class UnaryPredictor {
public:
    UnaryPredictor() = default;

    static UnaryPredictor train(const std::vector<const Image*>& images,
                                const std::vector<const Labeling*>& labelings, std::size_t labels,
                                const ForestConfig& config, RngStream& rng);

    std::size_t labels() const { return labels_; }
    std::size_t trees() const { return roots_.size(); }
    Labeling predict(const Image& image) const;

private:
    struct Node {
        std::int32_t left = -1;  ///< -1 marks a leaf
        std::int32_t right = -1;
        std::uint8_t feature = 0;
        std::uint8_t label = 0;  ///< majority label for leaves
        float threshold = 0.0f;
    };

    std::uint8_t predict_one(const PixelFeatures& f) const;

    std::size_t labels_ = 0;
    std::vector<Node> nodes_;
    std::vector<std::int32_t> roots_;
};

}  // namespace wim::seg
