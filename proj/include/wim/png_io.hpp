#pragma once

#include <string>

#include "wim/seg/grid.hpp"

namespace wim {

/// 8-bit RGB PNG <-> Image with channels in [0, 1].
seg::Image read_png_image(const std::string& path);
void write_png_image(const std::string& path, const seg::Image& image);

/// Label maps are single-channel 8-bit PNGs whose sample value is the label index.
seg::Labeling read_png_labels(const std::string& path);
void write_png_labels(const std::string& path, const seg::Labeling& labels);

/// Fixed display colour for a label index.
seg::Color label_color(std::size_t label);

}  // namespace wim
