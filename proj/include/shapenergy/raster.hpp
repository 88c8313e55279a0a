#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shapenergy/errors.hpp"
#include "shapenergy/geometry.hpp"

namespace shapenergy {

// Pixel grid over a fixed world window shared by every sample, so a pixel's
// position encodes absolute geometry.
struct RasterSpec {
  std::size_t width_px = 48;
  std::size_t height_px = 30;
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  static constexpr double kDefaultMargin = 6.0;

  static RasterSpec for_geometry(const GeometryConfig& cfg, double margin = kDefaultMargin,
                                 std::size_t width_px = 48, std::size_t height_px = 30) {
    return {width_px, height_px, -margin, cfg.length() + margin, -margin, cfg.width() + margin};
  }

  double pixel_width() const { return (x_max - x_min) / static_cast<double>(width_px); }
  double pixel_height() const { return (y_max - y_min) / static_cast<double>(height_px); }

  // Row 0 is the top (largest y).
  Vec2 pixel_center(std::size_t row, std::size_t col) const {
    return {x_min + (static_cast<double>(col) + 0.5) * pixel_width(),
            y_max - (static_cast<double>(row) + 0.5) * pixel_height()};
  }
};

// Row-major {0,1} grid; 1 marks building interior.
class BinaryImage {
 public:
  BinaryImage() = default;
  BinaryImage(std::size_t width, std::size_t height)
      : width_(width), height_(height), pixels_(width * height, 0) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  void set(std::size_t row, std::size_t col, bool interior) {
    pixels_[row * width_ + col] = interior ? 1 : 0;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto p : pixels_) n += p;
    return n;
  }

  BinaryImage flipped_horizontally() const {
    BinaryImage out(width_, height_);
    for (std::size_t r = 0; r < height_; ++r)
      for (std::size_t c = 0; c < width_; ++c) out.set(r, c, at(r, width_ - 1 - c) != 0);
    return out;
  }

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Pixel-center sampling, no anti-aliasing.
inline BinaryImage rasterize(const Footprint& f, const RasterSpec& spec) {
  for (const auto& v : f.vertices()) {
    if (!(v.x > spec.x_min && v.x < spec.x_max && v.y > spec.y_min && v.y < spec.y_max)) {
      throw WindowError("footprint vertex (" + std::to_string(v.x) + ", " + std::to_string(v.y) +
                        ") outside raster window");
    }
  }
  BinaryImage img(spec.width_px, spec.height_px);
  for (std::size_t r = 0; r < spec.height_px; ++r)
    for (std::size_t c = 0; c < spec.width_px; ++c)
      img.set(r, c, contains_point(f, spec.pixel_center(r, c)));
  return img;
}

// Binary PGM, black (0) interior on white (255) background.
inline std::string encode_pgm(const BinaryImage& img) {
  std::string out =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + img.pixels().size());
  for (std::size_t i = 0; i < img.pixels().size(); ++i) {
    out[header + i] = static_cast<char>(img.pixels()[i] ? 0x00 : 0xFF);
  }
  return out;
}

namespace detail {

// Reads one unsigned decimal header token terminated by a single whitespace byte.
inline std::size_t read_pgm_number(std::string_view data, std::size_t& pos, const char* what) {
  const std::size_t start = pos;
  std::size_t value = 0;
  while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9') {
    value = value * 10 + static_cast<std::size_t>(data[pos] - '0');
    if (value > 100000) throw FormatError(std::string("PGM ") + what + " too large", start);
    ++pos;
  }
  if (pos == start) throw FormatError(std::string("PGM ") + what + " expected", start);
  if (pos >= data.size()) throw FormatError("PGM header truncated", pos);
  const char sep = data[pos];
  if (sep != ' ' && sep != '\n' && sep != '\t' && sep != '\r') {
    throw FormatError(std::string("PGM ") + what + " not followed by whitespace", pos);
  }
  ++pos;
  return value;
}

}  // namespace detail

inline BinaryImage decode_pgm(std::string_view data, std::size_t expected_width = 48,
                              std::size_t expected_height = 30) {
  if (data.size() < 3 || data.substr(0, 2) != "P5") throw FormatError("PGM magic is not P5", 0);
  std::size_t pos = 2;
  if (data[pos] != '\n' && data[pos] != ' ') throw FormatError("PGM magic not terminated", pos);
  ++pos;
  const std::size_t dims_at = pos;
  const std::size_t width = detail::read_pgm_number(data, pos, "width");
  const std::size_t height = detail::read_pgm_number(data, pos, "height");
  if (width != expected_width || height != expected_height) {
    throw FormatError("PGM dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                          ", expected " + std::to_string(expected_width) + "x" +
                          std::to_string(expected_height),
                      dims_at);
  }
  const std::size_t maxval_at = pos;
  if (detail::read_pgm_number(data, pos, "maxval") != 255) {
    throw FormatError("PGM maxval must be 255", maxval_at);
  }
  const std::size_t payload = width * height;
  if (data.size() - pos < payload) {
    throw FormatError("PGM payload truncated: " + std::to_string(data.size() - pos) + " of " +
                          std::to_string(payload) + " bytes",
                      data.size());
  }
  if (data.size() - pos > payload) throw FormatError("trailing bytes after PGM payload", pos + payload);

  BinaryImage img(width, height);
  for (std::size_t i = 0; i < payload; ++i) {
    const auto byte = static_cast<unsigned char>(data[pos + i]);
    if (byte != 0x00 && byte != 0xFF) {
      throw FormatError("PGM pixel value " + std::to_string(byte) + " is not 0 or 255", pos + i);
    }
    img.set(i / width, i % width, byte == 0x00);
  }
  return img;
}

}  // namespace shapenergy
