#include "forgekit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "forgekit/image_io.hpp"
#include "forgekit/rewards.hpp"

namespace forgekit {

namespace {

struct gaussian_source {
  explicit gaussian_source(std::uint64_t seed) : rng(seed) {}

  double next() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u = 1.0 - (rng() >> 11) * 0x1.0p-53;  // (0,1]
    const double v = (rng() >> 11) * 0x1.0p-53;        // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * M_PI * v;
    spare = r * std::sin(a);
    have_spare = true;
    return r * std::cos(a);
  }

  std::mt19937_64 rng;
  double spare = 0.0;
  bool have_spare = false;
};

std::uint8_t quantize(double v) {
  return std::uint8_t(std::clamp<long>(std::lround(v), 0, 255));
}

raster_image apply_noise(const raster_image& img, double sigma,
                         std::uint64_t seed) {
  if (sigma < 0.0) fail(errc::invalid_param, "noise sigma must be >= 0");
  if (sigma == 0.0) return img;
  raster_image out(img.width, img.height);
  gaussian_source gauss(seed);
  for (size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = quantize(double(img.data[i]) + sigma * gauss.next());
  return out;
}

raster_image apply_blur(const raster_image& img, int kernel) {
  if (kernel < 1 || kernel % 2 == 0)
    fail(errc::invalid_param, "blur kernel must be odd and >= 1");
  if (kernel == 1) return img;

  const double sigma = kernel / 6.0;
  const int r = (kernel - 1) / 2;
  std::vector<double> w(kernel);
  double sum = 0.0;
  for (int i = 0; i < kernel; ++i) {
    const double d = (i - r) / sigma;
    w[i] = std::exp(-0.5 * d * d);
    sum += w[i];
  }
  for (double& v : w) v /= sum;

  const int width = img.width, height = img.height;
  raster_image out(width, height);
  std::vector<double> tmp(size_t(width) * height);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int k = 0; k < kernel; ++k)
          acc += w[k] * img.at(std::clamp(x + k - r, 0, width - 1), y, c);
        tmp[size_t(y) * width + x] = acc;
      }
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int k = 0; k < kernel; ++k)
          acc += w[k] * tmp[size_t(std::clamp(y + k - r, 0, height - 1)) * width + x];
        out.at(x, y, c) = quantize(acc);
      }
  }
  return out;
}

raster_image apply_resize(const raster_image& img, double rate) {
  if (!(rate > 0.0)) fail(errc::invalid_param, "resize rate must be > 0");
  const int ow = std::max(1, int(std::lround(img.width * rate)));
  const int oh = std::max(1, int(std::lround(img.height * rate)));
  if (ow == img.width && oh == img.height) return img;

  raster_image out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    const double sy =
        std::clamp((y + 0.5) * img.height / oh - 0.5, 0.0, double(img.height - 1));
    const int y0 = int(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < ow; ++x) {
      const double sx =
          std::clamp((x + 0.5) * img.width / ow - 0.5, 0.0, double(img.width - 1));
      const int x0 = int(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(x0, y0, c) * (1 - fx) + img.at(x1, y0, c) * fx;
        const double bot = img.at(x0, y1, c) * (1 - fx) + img.at(x1, y1, c) * fx;
        out.at(x, y, c) = quantize(top * (1 - fy) + bot * fy);
      }
    }
  }
  return out;
}

}  // namespace

binary_mask binarize_map(const gray_map& map, double threshold) {
  binary_mask out(map.width, map.height);
  for (size_t i = 0; i < map.data.size(); ++i)
    out.data[i] = double(map.data[i]) > threshold ? 1 : 0;
  return out;
}

label map_to_detection(const gray_map& map, double threshold) {
  for (float v : map.data)
    if (double(v) > threshold) return label::fake;
  return label::real;
}

label mask_to_detection(const binary_mask& mask) {
  for (std::uint8_t v : mask.data)
    if (v) return label::fake;
  return label::real;
}

detection_summary detection_metrics(const std::vector<detection_record>& records) {
  if (records.empty()) fail(errc::empty_input, "no detection records");
  detection_summary s;
  for (const auto& r : records) {
    const bool pred_fake = r.pred == label::fake;
    const bool gt_fake = r.gt == label::fake;
    s.tp += pred_fake && gt_fake;
    s.fp += pred_fake && !gt_fake;
    s.tn += !pred_fake && !gt_fake;
    s.fn += !pred_fake && gt_fake;
  }
  const double denom = double(2 * s.tp + s.fp + s.fn);
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * double(s.tp) / denom;
  s.accuracy = double(s.tp + s.tn) / double(records.size());
  return s;
}

pixel_summary pixel_metrics(const binary_mask& pred, const binary_mask& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    fail(errc::shape_mismatch, "mask shapes differ");
  std::int64_t inter = 0, np = 0, ng = 0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool g = gt.data[i] != 0;
    inter += p && g;
    np += p;
    ng += g;
  }
  if (ng == 0) return np == 0 ? pixel_summary{1.0, 1.0} : pixel_summary{0.0, 0.0};
  const std::int64_t uni = np + ng - inter;
  return {2.0 * double(inter) / double(np + ng), double(inter) / double(uni)};
}

std::vector<bounding_box> mask_to_boxes(const binary_mask& mask,
                                        const component_filter& filter) {
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> seen(mask.data.size(), 0);
  std::vector<bounding_box> out;
  std::vector<int> stack;
  const double area_floor = filter.min_area_frac * double(w) * double(h);

  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const size_t start = size_t(sy) * w + sx;
      if (!mask.data[start] || seen[start]) continue;
      seen[start] = 1;
      stack.assign(1, int(start));
      std::int64_t count = 0;
      int min_x = sx, max_x = sx, min_y = sy, max_y = sy;
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int x = idx % w, y = idx / w;
        ++count;
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const size_t nidx = size_t(ny) * w + nx;
            if (mask.data[nidx] && !seen[nidx]) {
              seen[nidx] = 1;
              stack.push_back(int(nidx));
            }
          }
        }
      }
      if (count >= filter.min_pixels && double(count) >= area_floor)
        out.push_back({min_x, min_y, max_x + 1, max_y + 1});
    }
  }
  std::sort(out.begin(), out.end(), [](const bounding_box& a, const bounding_box& b) {
    return a.y1 != b.y1 ? a.y1 < b.y1 : a.x1 < b.x1;
  });
  return out;
}

binary_mask box_fill_mask(const std::vector<bounding_box>& boxes, int width,
                          int height) {
  binary_mask out(width, height);
  for (const auto& raw : boxes) {
    const bounding_box b = clamp_box(raw, width, height);
    for (int y = b.y1; y < b.y2; ++y)
      for (int x = b.x1; x < b.x2; ++x) out.at(x, y) = 1;
  }
  return out;
}

double bbox_eval(const std::vector<localization_record>& records) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const auto& r : records) {
    if (r.gt_label != label::fake) continue;
    sum += hungarian_iou(r.pred, r.gt);
    ++n;
  }
  if (n == 0) fail(errc::empty_input, "no tampered records to evaluate");
  return sum / double(n);
}

double weighted_average(
    const std::vector<std::pair<double, std::int64_t>>& value_count) {
  if (value_count.empty()) fail(errc::empty_input, "nothing to average");
  double num = 0.0;
  std::int64_t den = 0;
  for (const auto& [value, count] : value_count) {
    if (count < 1) fail(errc::invalid_param, "weights must be positive counts");
    num += value * double(count);
    den += count;
  }
  return num / double(den);
}

std::string to_string(degrade_kind k) {
  switch (k) {
    case degrade_kind::jpeg: return "jpeg";
    case degrade_kind::noise: return "noise";
    case degrade_kind::blur: return "blur";
    case degrade_kind::resize: return "resize";
  }
  return "?";
}

degrade_kind degrade_kind_from_string(const std::string& s) {
  if (s == "jpeg") return degrade_kind::jpeg;
  if (s == "noise") return degrade_kind::noise;
  if (s == "blur") return degrade_kind::blur;
  if (s == "resize") return degrade_kind::resize;
  fail(errc::invalid_param, "unknown degradation \"" + s + "\"");
}

degrade_op degrade_op::make_jpeg(int quality) {
  degrade_op op;
  op.kind = degrade_kind::jpeg;
  op.quality = quality;
  return op;
}

degrade_op degrade_op::make_noise(double sigma, std::uint64_t seed) {
  degrade_op op;
  op.kind = degrade_kind::noise;
  op.sigma = sigma;
  op.seed = seed;
  return op;
}

degrade_op degrade_op::make_blur(int kernel) {
  degrade_op op;
  op.kind = degrade_kind::blur;
  op.kernel = kernel;
  return op;
}

degrade_op degrade_op::make_resize(double rate) {
  degrade_op op;
  op.kind = degrade_kind::resize;
  op.rate = rate;
  return op;
}

raster_image degrade(const raster_image& img, const degrade_op& op) {
  switch (op.kind) {
    case degrade_kind::jpeg: return decode_jpeg(encode_jpeg(img, op.quality));
    case degrade_kind::noise: return apply_noise(img, op.sigma, op.seed);
    case degrade_kind::blur: return apply_blur(img, op.kernel);
    case degrade_kind::resize: return apply_resize(img, op.rate);
  }
  fail(errc::invalid_param, "unknown degradation kind");
}

}  // namespace forgekit
