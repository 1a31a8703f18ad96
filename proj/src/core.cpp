#include "forgekit/core.hpp"

#include <algorithm>

namespace forgekit {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::degenerate_box: return "degenerate_box";
    case errc::image_too_small: return "image_too_small";
    case errc::encode_failure: return "encode_failure";
    case errc::unknown_tool: return "unknown_tool";
    case errc::bad_arguments: return "bad_arguments";
    case errc::malformed_json: return "malformed_json";
    case errc::missing_answer_tag: return "missing_answer_tag";
    case errc::missing_label_keyword: return "missing_label_keyword";
    case errc::empty_ground_truth: return "empty_ground_truth";
    case errc::empty_group: return "empty_group";
    case errc::empty_input: return "empty_input";
    case errc::shape_mismatch: return "shape_mismatch";
    case errc::manifest_mismatch: return "manifest_mismatch";
    case errc::missing_gt_box: return "missing_gt_box";
    case errc::invalid_param: return "invalid_param";
    case errc::io_failure: return "io_failure";
  }
  return "unknown";
}

std::string to_string(label v) { return v == label::real ? "real" : "fake"; }

std::string to_string(tool_id v) {
  switch (v) {
    case tool_id::ela: return "ELA";
    case tool_id::fft: return "FFT";
    case tool_id::npp: return "NPP";
    case tool_id::zoom_in: return "zoom_in";
  }
  return "?";
}

label label_from_string(const std::string& s) {
  if (s == "real") return label::real;
  if (s == "fake") return label::fake;
  fail(errc::invalid_param, "label must be \"real\" or \"fake\", got \"" + s + "\"");
}

tool_id tool_from_string(const std::string& s) {
  for (tool_id t : all_tools)
    if (s == to_string(t)) return t;
  fail(errc::unknown_tool, "\"" + s + "\"");
}

bool box_valid(const bounding_box& b) noexcept {
  return b.x1 >= 0 && b.y1 >= 0 && b.x1 < b.x2 && b.y1 < b.y2;
}

bounding_box make_box(int x1, int y1, int x2, int y2) {
  bounding_box b{x1, y1, x2, y2};
  if (!box_valid(b))
    fail(errc::degenerate_box, "(" + std::to_string(x1) + "," + std::to_string(y1) +
                                   "," + std::to_string(x2) + "," + std::to_string(y2) + ")");
  return b;
}

std::int64_t box_area(const bounding_box& b) noexcept {
  return std::int64_t(b.x2 - b.x1) * std::int64_t(b.y2 - b.y1);
}

double box_iou(const bounding_box& a, const bounding_box& b) {
  if (!box_valid(a) || !box_valid(b)) fail(errc::degenerate_box, "box_iou operand");
  const std::int64_t iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const std::int64_t ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const std::int64_t inter = iw * ih;
  const std::int64_t uni = box_area(a) + box_area(b) - inter;
  return double(inter) / double(uni);
}

bounding_box clamp_box(const bounding_box& b, int width, int height) {
  bounding_box c{std::clamp(b.x1, 0, width), std::clamp(b.y1, 0, height),
                 std::clamp(b.x2, 0, width), std::clamp(b.y2, 0, height)};
  if (c.x1 >= c.x2 || c.y1 >= c.y2)
    fail(errc::degenerate_box,
         "box collapsed after clamping to " + std::to_string(width) + "x" +
             std::to_string(height));
  return c;
}

raster_image raster_image::filled(int w, int h, std::uint8_t r, std::uint8_t g,
                                  std::uint8_t b) {
  raster_image img(w, h);
  for (size_t i = 0; i < img.data.size(); i += 3) {
    img.data[i] = r;
    img.data[i + 1] = g;
    img.data[i + 2] = b;
  }
  return img;
}

}  // namespace forgekit
