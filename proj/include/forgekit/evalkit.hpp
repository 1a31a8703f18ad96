#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "forgekit/core.hpp"

namespace forgekit {

// Strictly greater than threshold.
binary_mask binarize_map(const gray_map& map, double threshold = 0.5);

// Image counts as tampered iff any pixel survives the threshold.
label map_to_detection(const gray_map& map, double threshold = 0.5);
label mask_to_detection(const binary_mask& mask);

struct detection_record {
  label pred = label::real;
  label gt = label::real;
};

// Fake is the positive class. F1 falls back to 0 on an empty denominator.
struct detection_summary {
  double f1 = 0.0;
  double accuracy = 0.0;
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};
detection_summary detection_metrics(const std::vector<detection_record>& records);

struct pixel_summary {
  double f1 = 0.0;
  double iou = 0.0;
};
// Empty gt scores (1,1) against an empty prediction and (0,0) otherwise.
pixel_summary pixel_metrics(const binary_mask& pred, const binary_mask& gt);

struct component_filter {
  std::int64_t min_pixels = 100;
  double min_area_frac = 0.0005;  // of the mask area
};

// Minimum bounding rectangle per 8-connected component; a component survives
// only if it clears both size floors. Boxes come back sorted by (y1, x1).
std::vector<bounding_box> mask_to_boxes(const binary_mask& mask,
                                        const component_filter& filter = {});

// Union of clamped boxes. A box entirely outside throws degenerate_box.
binary_mask box_fill_mask(const std::vector<bounding_box>& boxes, int width,
                          int height);

struct localization_record {
  std::vector<bounding_box> pred;
  std::vector<bounding_box> gt;
  label gt_label = label::real;
};

// Mean matched IoU over tampered records only; throws empty_input when none.
double bbox_eval(const std::vector<localization_record>& records);

// Sum(n_i * m_i) / Sum(n_i); counts must be >= 1.
double weighted_average(const std::vector<std::pair<double, std::int64_t>>& value_count);

enum class degrade_kind : std::uint8_t { jpeg, noise, blur, resize };

std::string to_string(degrade_kind k);
degrade_kind degrade_kind_from_string(const std::string& s);

struct degrade_op {
  degrade_kind kind = degrade_kind::jpeg;
  int quality = 90;         // jpeg
  double sigma = 5.0;       // noise, in 8-bit counts
  std::uint64_t seed = 0;   // noise
  int kernel = 5;           // blur; odd, sigma is kernel/6
  double rate = 1.0;        // resize, bilinear

  static degrade_op make_jpeg(int quality);
  static degrade_op make_noise(double sigma, std::uint64_t seed);
  static degrade_op make_blur(int kernel);
  static degrade_op make_resize(double rate);
};

// Identity parameters (sigma 0, kernel 1, rate 1.0) return the input bits.
raster_image degrade(const raster_image& img, const degrade_op& op);

}  // namespace forgekit
