#include "wim/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace wim {

namespace {

std::vector<std::uint8_t> read_raw(const std::string& path, png_uint_32 format, std::size_t& w,
                                   std::size_t& h) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw Error("png: cannot read " + path + ": " + img.message);
    img.format = format;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&img);
        throw Error("png: cannot decode " + path + ": " + img.message);
    }
    w = img.width;
    h = img.height;
    return buf;
}

void write_raw(const std::string& path, png_uint_32 format, std::size_t w, std::size_t h,
               const std::vector<std::uint8_t>& buf) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(w);
    img.height = static_cast<png_uint_32>(h);
    img.format = format;
    if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
        throw Error("png: cannot write " + path + ": " + img.message);
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

seg::Image read_png_image(const std::string& path) {
    std::size_t w = 0, h = 0;
    const auto buf = read_raw(path, PNG_FORMAT_RGB, w, h);
    seg::Image out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t ch = 0; ch < 3; ++ch) out[i][ch] = buf[3 * i + ch] / 255.0;
    return out;
}

void write_png_image(const std::string& path, const seg::Image& image) {
    std::vector<std::uint8_t> buf(3 * image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
        for (std::size_t ch = 0; ch < 3; ++ch) buf[3 * i + ch] = to_byte(image[i][ch]);
    write_raw(path, PNG_FORMAT_RGB, image.width, image.height, buf);
}

seg::Labeling read_png_labels(const std::string& path) {
    std::size_t w = 0, h = 0;
    const auto buf = read_raw(path, PNG_FORMAT_GRAY, w, h);
    seg::Labeling out(w, h);
    std::copy(buf.begin(), buf.end(), out.labels.begin());
    return out;
}

void write_png_labels(const std::string& path, const seg::Labeling& labels) {
    write_raw(path, PNG_FORMAT_GRAY, labels.width, labels.height,
              std::vector<std::uint8_t>(labels.labels.begin(), labels.labels.end()));
}

seg::Color label_color(std::size_t label) {
    static constexpr seg::Color kPalette[] = {
        {0.12, 0.47, 0.71}, {1.00, 0.50, 0.05}, {0.17, 0.63, 0.17}, {0.84, 0.15, 0.16},
        {0.58, 0.40, 0.74}, {0.55, 0.34, 0.29}, {0.89, 0.47, 0.76}, {0.50, 0.50, 0.50},
    };
    return kPalette[label % std::size(kPalette)];
}

}  // namespace wim
