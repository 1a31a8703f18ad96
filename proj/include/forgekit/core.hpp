#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forgekit/error.hpp"

namespace forgekit {

enum class label : std::uint8_t { real, fake };
enum class tool_id : std::uint8_t { ela, fft, npp, zoom_in };

std::string to_string(label v);
std::string to_string(tool_id v);
label label_from_string(const std::string& s);       // "real" | "fake"
tool_id tool_from_string(const std::string& s);      // "ELA" | "FFT" | "NPP" | "zoom_in"

inline constexpr tool_id all_tools[] = {tool_id::ela, tool_id::fft, tool_id::npp,
                                        tool_id::zoom_in};

// Axis-aligned pixel rectangle; x2/y2 are exclusive, so area = (x2-x1)*(y2-y1).
struct bounding_box {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  friend bool operator==(const bounding_box&, const bounding_box&) = default;
};

bool box_valid(const bounding_box& b) noexcept;  // 0 <= x1 < x2 and 0 <= y1 < y2
bounding_box make_box(int x1, int y1, int x2, int y2);  // throws degenerate_box
std::int64_t box_area(const bounding_box& b) noexcept;

// Exact rational intersection-over-union of two valid boxes.
double box_iou(const bounding_box& a, const bounding_box& b);

// Clips b to [0,width]x[0,height]; throws degenerate_box if nothing is left.
bounding_box clamp_box(const bounding_box& b, int width, int height);

// 8-bit RGB image, row-major, interleaved channels.
struct raster_image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  raster_image() = default;
  raster_image(int w, int h) : width(w), height(h), data(size_t(w) * h * 3, 0) {}

  static raster_image filled(int w, int h, std::uint8_t r, std::uint8_t g,
                             std::uint8_t b);

  size_t index(int x, int y, int c) const {
    return (size_t(y) * width + x) * 3 + c;
  }
  std::uint8_t at(int x, int y, int c) const { return data[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return data[index(x, y, c)]; }

  friend bool operator==(const raster_image&, const raster_image&) = default;
};

// Single-channel float map, row-major, values in [0,1].
struct gray_map {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  gray_map() = default;
  gray_map(int w, int h) : width(w), height(h), data(size_t(w) * h, 0.f) {}

  size_t index(int x, int y) const { return size_t(y) * width + x; }
  float at(int x, int y) const { return data[index(x, y)]; }
  float& at(int x, int y) { return data[index(x, y)]; }

  friend bool operator==(const gray_map&, const gray_map&) = default;
};

struct binary_mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  binary_mask() = default;
  binary_mask(int w, int h) : width(w), height(h), data(size_t(w) * h, 0) {}

  size_t index(int x, int y) const { return size_t(y) * width + x; }
  std::uint8_t at(int x, int y) const { return data[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return data[index(x, y)]; }

  friend bool operator==(const binary_mask&, const binary_mask&) = default;
};

}  // namespace forgekit
