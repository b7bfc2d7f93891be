#include "wim/seg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "wim/png_io.hpp"

namespace wim::seg {

namespace {

Color label_base_color(std::size_t label, std::size_t labels) {
    // evenly spaced hues around mid-grey
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) / static_cast<double>(labels);
    const double r = 0.16;
    return {0.5 + r * std::cos(angle), 0.5 + r * std::cos(angle - 2.0944), 0.5 + r * std::cos(angle + 2.0944)};
}

double bilinear(const std::vector<double>& grid, std::size_t n, double u, double v) {
    const double gu = u * static_cast<double>(n - 1), gv = v * static_cast<double>(n - 1);
    const auto i0 = std::min(static_cast<std::size_t>(gu), n - 2);
    const auto j0 = std::min(static_cast<std::size_t>(gv), n - 2);
    const double fu = gu - static_cast<double>(i0), fv = gv - static_cast<double>(j0);
    auto at = [&](std::size_t i, std::size_t j) { return grid[i * n + j]; };
    return (1 - fu) * ((1 - fv) * at(i0, j0) + fv * at(i0, j0 + 1)) +
           fu * ((1 - fv) * at(i0 + 1, j0) + fv * at(i0 + 1, j0 + 1));
}

}  // namespace

LabeledImage generate_scene(const CorpusConfig& config, RngStream& rng) {
    if (config.labels < 1 || config.labels > 255 || config.width == 0 || config.height == 0 ||
        config.coarse_grid < 1)
        throw Error("generate_scene: bad corpus configuration");
    const std::size_t n = config.coarse_grid + 1;
    std::vector<std::vector<double>> fields(config.labels, std::vector<double>(n * n));
    for (auto& f : fields)
        for (double& v : f) v = rng.uniform();

    LabeledImage out{Image(config.width, config.height), Labeling(config.width, config.height)};
    for (std::size_t r = 0; r < config.height; ++r)
        for (std::size_t c = 0; c < config.width; ++c) {
            const double u = (static_cast<double>(r) + 0.5) / static_cast<double>(config.height);
            const double v = (static_cast<double>(c) + 0.5) / static_cast<double>(config.width);
            std::size_t best = 0;
            double best_v = -1.0;
            for (std::size_t l = 0; l < config.labels; ++l) {
                const double f = bilinear(fields[l], n, u, v);
                if (f > best_v) {
                    best_v = f;
                    best = l;
                }
            }
            out.truth[r * config.width + c] = static_cast<Label>(best);
        }

    // two mixture components per label, offset along a fixed per-label direction
    std::vector<std::array<Color, 2>> components(config.labels);
    const RngStream palette_rng(0x9a1e77e5ULL);
    for (std::size_t l = 0; l < config.labels; ++l) {
        const Color base = label_base_color(l, config.labels);
        RngStream dir_rng = palette_rng.split(l);
        Color dir{dir_rng.normal(), dir_rng.normal(), dir_rng.normal()};
        const double norm = std::sqrt(squared_norm(dir)) + 1e-12;
        Color shift{};
        for (std::size_t ch = 0; ch < 3; ++ch) shift[ch] = config.illumination_shift * rng.normal();
        for (std::size_t k = 0; k < 2; ++k) {
            const double sign = k == 0 ? 1.0 : -1.0;
            for (std::size_t ch = 0; ch < 3; ++ch)
                components[l][k][ch] = base[ch] + shift[ch] + sign * config.palette_spread * dir[ch] / norm;
        }
    }
    for (std::size_t i = 0; i < out.image.size(); ++i) {
        const Label l = out.truth[i];
        const std::size_t k = rng.below(2);
        for (std::size_t ch = 0; ch < 3; ++ch)
            out.image[i][ch] =
                std::clamp(components[l][k][ch] + config.pixel_noise * rng.normal(), 0.0, 1.0);
    }
    return out;
}

std::vector<LabeledImage> generate_corpus(const CorpusConfig& config, std::size_t count, RngStream& rng) {
    std::vector<LabeledImage> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        RngStream scene_rng = rng.split(k);
        out.push_back(generate_scene(config, scene_rng));
    }
    return out;
}

std::vector<LabeledImage> load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error("load_corpus: not a directory: " + dir);
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const fs::path& p = entry.path();
        if (p.extension() != ".png") continue;
        const std::string stem = p.stem().string();
        if (stem.size() >= 6 && stem.compare(stem.size() - 6, 6, "_label") == 0) continue;
        images.push_back(p);
    }
    std::sort(images.begin(), images.end());
    std::vector<LabeledImage> out;
    for (const auto& p : images) {
        const fs::path label_path = p.parent_path() / (p.stem().string() + "_label.png");
        if (!fs::exists(label_path)) throw Error("load_corpus: missing label map " + label_path.string());
        LabeledImage li{read_png_image(p.string()), read_png_labels(label_path.string())};
        if (li.image.width != li.truth.width || li.image.height != li.truth.height)
            throw Error("load_corpus: image/label size mismatch for " + p.string());
        out.push_back(std::move(li));
    }
    if (out.empty()) throw Error("load_corpus: no images in " + dir);
    return out;
}

}  // namespace wim::seg
