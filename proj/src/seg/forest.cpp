#include "wim/seg/forest.hpp"

#include <algorithm>
#include <limits>

namespace wim::seg {

std::vector<PixelFeatures> pixel_features(const Image& image) {
    const std::size_t w = image.width, h = image.height;
    std::vector<PixelFeatures> out(image.size());
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t i = r * w + c;
            Color sum{0, 0, 0}, sq{0, 0, 0};
            double n = 0.0;
            for (std::size_t rr = (r == 0 ? 0 : r - 1); rr <= std::min(h - 1, r + 1); ++rr)
                for (std::size_t cc = (c == 0 ? 0 : c - 1); cc <= std::min(w - 1, c + 1); ++cc) {
                    const Color& p = image[rr * w + cc];
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        sum[ch] += p[ch];
                        sq[ch] += p[ch] * p[ch];
                    }
                    n += 1.0;
                }
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const double mean = sum[ch] / n;
                out[i][ch] = static_cast<float>(image[i][ch]);
                out[i][3 + ch] = static_cast<float>(mean);
                out[i][6 + ch] = static_cast<float>(std::max(0.0, sq[ch] / n - mean * mean));
            }
        }
    return out;
}

namespace {

struct Sample {
    PixelFeatures f;
    std::uint8_t label;
};

double gini(const std::vector<double>& counts, double total) {
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += c * c;
    return 1.0 - s / (total * total);
}

std::uint8_t majority(const std::vector<double>& counts) {
    std::size_t best = 0;
    for (std::size_t l = 1; l < counts.size(); ++l)
        if (counts[l] > counts[best]) best = l;
    return static_cast<std::uint8_t>(best);
}

}  // namespace

UnaryPredictor UnaryPredictor::train(const std::vector<const Image*>& images,
                                     const std::vector<const Labeling*>& labelings, std::size_t labels,
                                     const ForestConfig& config, RngStream& rng) {
    if (images.empty()) throw Error("unary_train: empty training set");
    if (images.size() != labelings.size()) throw Error("unary_train: image/labeling count mismatch");
    if (labels < 1 || labels > 255) throw Error("unary_train: bad label count");
    if (config.trees < 1 || config.features_per_split < 1 ||
        config.features_per_split > kPixelFeatures)
        throw Error("unary_train: bad forest configuration");

    std::vector<Sample> all;
    for (std::size_t k = 0; k < images.size(); ++k) {
        const Image& img = *images[k];
        const Labeling& lab = *labelings[k];
        if (img.width != lab.width || img.height != lab.height)
            throw Error("unary_train: feature/label dimension mismatch");
        const auto feats = pixel_features(img);
        for (std::size_t i = 0; i < feats.size(); ++i) {
            if (lab[i] >= labels) throw Error("unary_train: label out of range");
            all.push_back({feats[i], lab[i]});
        }
    }

    UnaryPredictor forest;
    forest.labels_ = labels;
    const std::size_t n_boot = std::min(all.size(), config.max_samples_per_tree);

    struct Task {
        std::int32_t node;
        std::size_t begin, end, depth;
    };

    for (std::size_t t = 0; t < config.trees; ++t) {
        RngStream tree_rng = rng.split(t);
        std::vector<Sample> boot(n_boot);
        for (auto& s : boot) s = all[tree_rng.below(all.size())];

        forest.roots_.push_back(static_cast<std::int32_t>(forest.nodes_.size()));
        forest.nodes_.push_back({});
        std::vector<Task> stack{{forest.roots_.back(), 0, boot.size(), 0}};
        std::vector<double> counts(labels), left(labels), right(labels);
        while (!stack.empty()) {
            const Task task = stack.back();
            stack.pop_back();
            std::fill(counts.begin(), counts.end(), 0.0);
            for (std::size_t i = task.begin; i < task.end; ++i) counts[boot[i].label] += 1.0;
            const double total = static_cast<double>(task.end - task.begin);
            forest.nodes_[static_cast<std::size_t>(task.node)].label = majority(counts);
            const double parent = gini(counts, total);
            if (task.depth >= config.max_depth || total < 2.0 * static_cast<double>(config.min_leaf) ||
                parent <= 0.0)
                continue;

            double best_gain = 1e-12;
            std::uint8_t best_feature = 0;
            float best_threshold = 0.0f;
            for (std::size_t k = 0; k < config.features_per_split; ++k) {
                const auto feature = static_cast<std::uint8_t>(tree_rng.below(kPixelFeatures));
                float lo = std::numeric_limits<float>::max(), hi = std::numeric_limits<float>::lowest();
                for (std::size_t i = task.begin; i < task.end; ++i) {
                    lo = std::min(lo, boot[i].f[feature]);
                    hi = std::max(hi, boot[i].f[feature]);
                }
                if (!(hi > lo)) continue;
                for (std::size_t k2 = 0; k2 < config.thresholds_per_feature; ++k2) {
                    const float thr = lo + static_cast<float>(tree_rng.uniform()) * (hi - lo);
                    std::fill(left.begin(), left.end(), 0.0);
                    std::fill(right.begin(), right.end(), 0.0);
                    for (std::size_t i = task.begin; i < task.end; ++i)
                        (boot[i].f[feature] < thr ? left : right)[boot[i].label] += 1.0;
                    double nl = 0.0;
                    for (double c : left) nl += c;
                    const double nr = total - nl;
                    if (nl < static_cast<double>(config.min_leaf) || nr < static_cast<double>(config.min_leaf))
                        continue;
                    const double gain = parent - (nl * gini(left, nl) + nr * gini(right, nr)) / total;
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = feature;
                        best_threshold = thr;
                    }
                }
            }
            if (best_gain <= 1e-12) continue;

            auto mid = std::partition(boot.begin() + static_cast<std::ptrdiff_t>(task.begin),
                                      boot.begin() + static_cast<std::ptrdiff_t>(task.end),
                                      [&](const Sample& s) { return s.f[best_feature] < best_threshold; });
            const auto split = static_cast<std::size_t>(mid - boot.begin());
            const auto l = static_cast<std::int32_t>(forest.nodes_.size());
            forest.nodes_.push_back({});
            const auto r = static_cast<std::int32_t>(forest.nodes_.size());
            forest.nodes_.push_back({});
            Node& node = forest.nodes_[static_cast<std::size_t>(task.node)];
            node.left = l;
            node.right = r;
            node.feature = best_feature;
            node.threshold = best_threshold;
            stack.push_back({r, split, task.end, task.depth + 1});
            stack.push_back({l, task.begin, split, task.depth + 1});
        }
    }
    return forest;
}

std::uint8_t UnaryPredictor::predict_one(const PixelFeatures& f) const {
    std::array<std::uint32_t, 256> votes{};
    for (std::int32_t root : roots_) {
        std::int32_t k = root;
        while (nodes_[static_cast<std::size_t>(k)].left >= 0) {
            const Node& n = nodes_[static_cast<std::size_t>(k)];
            k = f[n.feature] < n.threshold ? n.left : n.right;
        }
        ++votes[nodes_[static_cast<std::size_t>(k)].label];
    }
    std::size_t best = 0;
    for (std::size_t l = 1; l < labels_; ++l)
        if (votes[l] > votes[best]) best = l;
    return static_cast<std::uint8_t>(best);
}

Labeling UnaryPredictor::predict(const Image& image) const {
    if (roots_.empty()) throw Error("unary_predict: forest is not trained");
    const auto feats = pixel_features(image);
    Labeling out(image.width, image.height);
    for (std::size_t i = 0; i < feats.size(); ++i) out[i] = predict_one(feats[i]);
    return out;
}

}  // namespace wim::seg
