#include "wim/seg/grid.hpp"

namespace wim::seg {

GridGraph::GridGraph(std::size_t width, std::size_t height)
    : width_(width), height_(height), adjacency_(width * height) {
    if (width == 0 || height == 0) throw Error("grid: empty");
    auto add = [&](std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1, EdgeType t) {
        const auto i = static_cast<std::uint32_t>(r0 * width + c0);
        const auto j = static_cast<std::uint32_t>(r1 * width + c1);
        const auto e = static_cast<std::uint32_t>(edges_.size());
        edges_.push_back({i, j, t});
        adjacency_[i].push_back({j, e, t});
        adjacency_[j].push_back({i, e, t});
    };
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            if (c + 1 < width) add(r, c, r, c + 1, EdgeType::horizontal);
            if (r + 1 < height) add(r, c, r + 1, c, EdgeType::vertical);
            if (r + 1 < height && c + 1 < width) add(r, c, r + 1, c + 1, EdgeType::diagonal_down);
            if (r >= 1 && c + 1 < width) add(r, c, r - 1, c + 1, EdgeType::diagonal_up);
        }
}

std::vector<double> edge_color_differences(const GridGraph& graph, const Image& image) {
    graph.require_shape(image);
    std::vector<double> out;
    out.reserve(graph.edges().size());
    for (const Edge& e : graph.edges()) out.push_back(squared_distance(image[e.i], image[e.j]));
    return out;
}

double hamming_error(const Labeling& truth, const Labeling& predicted) {
    if (truth.size() != predicted.size() || truth.size() == 0)
        throw Error("hamming_error: dimension mismatch");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += truth[i] != predicted[i];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

}  // namespace wim::seg
