#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "wim/error.hpp"

namespace wim::seg {

using Color = std::array<double, 3>;
using Label = std::uint8_t;

inline double squared_distance(const Color& a, const Color& b) {
    const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
    return d0 * d0 + d1 * d1 + d2 * d2;
}

inline double squared_norm(const Color& a) { return a[0] * a[0] + a[1] * a[1] + a[2] * a[2]; }

/// Row-major RGB image with channels in [0, 1].
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Color> pixels;

    Image() = default;
    Image(std::size_t w, std::size_t h, Color fill = {0.0, 0.0, 0.0})
        : width(w), height(h), pixels(w * h, fill) {}
    std::size_t size() const { return pixels.size(); }
    Color& operator[](std::size_t i) { return pixels[i]; }
    const Color& operator[](std::size_t i) const { return pixels[i]; }
};

struct Labeling {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Label> labels;

    Labeling() = default;
    Labeling(std::size_t w, std::size_t h, Label fill = 0) : width(w), height(h), labels(w * h, fill) {}
    std::size_t size() const { return labels.size(); }
    Label& operator[](std::size_t i) { return labels[i]; }
    Label operator[](std::size_t i) const { return labels[i]; }
    bool operator==(const Labeling&) const = default;
};

/// Horizontal, vertical, down-right and up-right neighbour pairs.
enum class EdgeType : std::uint8_t { horizontal = 0, vertical = 1, diagonal_down = 2, diagonal_up = 3 };
inline constexpr std::size_t kEdgeTypes = 4;

struct Edge {
    std::uint32_t i;
    std::uint32_t j;
    EdgeType type;
};

struct Neighbor {
    std::uint32_t pixel;
    std::uint32_t edge;
    EdgeType type;
};

/// 8-connected pixel grid. Every undirected edge appears once in edges();
/// neighbors(i) lists it from both endpoints.
class GridGraph {
public:
    GridGraph(std::size_t width, std::size_t height);

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t size() const { return width_ * height_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Neighbor>& neighbors(std::size_t i) const { return adjacency_[i]; }

    template <class T>
    void require_shape(const T& t) const {
        if (t.width != width_ || t.height != height_) throw Error("grid: dimension mismatch");
    }

private:
    std::size_t width_;
    std::size_t height_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Neighbor>> adjacency_;
};

/// Squared colour difference per edge, in edges() order.
std::vector<double> edge_color_differences(const GridGraph& graph, const Image& image);

double hamming_error(const Labeling& truth, const Labeling& predicted);

}  // namespace wim::seg
