#include "forgekit/toolbox.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "forgekit/image_io.hpp"

namespace forgekit {

namespace {

// FFTW plan creation is not thread-safe; execution is.
std::mutex g_fftw_mutex;

void min_max_scale(gray_map& m) {
  float lo = m.data.empty() ? 0.f : m.data[0];
  float hi = lo;
  for (float v : m.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) {
    std::fill(m.data.begin(), m.data.end(), 0.f);
    return;
  }
  const float span = hi - lo;
  for (float& v : m.data) v = (v - lo) / span;
}

std::vector<double> luminance(const raster_image& img) {
  std::vector<double> out(size_t(img.width) * img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out[size_t(y) * img.width + x] = 0.299 * img.at(x, y, 0) +
                                       0.587 * img.at(x, y, 1) +
                                       0.114 * img.at(x, y, 2);
  return out;
}

std::uint8_t median9(std::uint8_t* v) {
  std::nth_element(v, v + 4, v + 9);
  return v[4];
}

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void validate_fft_config(const fft_config& cfg) {
  if (!power_of_two(cfg.block_size) || cfg.block_size < 8)
    fail(errc::invalid_param, "block_size must be a power of two >= 8");
  if (!(cfg.radial_cutoff >= 0.0) || cfg.radial_cutoff > 1.0)
    fail(errc::invalid_param, "radial_cutoff must be in [0,1]");
}

gray_map global_spectrum(const raster_image& img) {
  const int w = img.width, h = img.height;
  const auto spec = dft2d(luminance(img), w, h);
  gray_map out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // shift so DC lands at (w/2, h/2)
      const int sy = (y + h / 2) % h;
      const int sx = (x + w / 2) % w;
      const double mag = std::abs(spec[size_t(y) * w + x]);
      out.at(sx, sy) = float(std::log1p(mag));
    }
  }
  min_max_scale(out);
  return out;
}

gray_map high_freq_heatmap(const raster_image& img, const fft_config& cfg) {
  const int bs = cfg.block_size;
  if (img.width < bs || img.height < bs)
    fail(errc::image_too_small, "image smaller than one tile");
  const int tiles_x = img.width / bs;
  const int tiles_y = img.height / bs;
  const auto luma = luminance(img);

  const double cutoff = cfg.radial_cutoff * (bs / 2.0);
  std::vector<double> energy(size_t(tiles_x) * tiles_y, 0.0);
  std::vector<double> tile(size_t(bs) * bs);
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      for (int y = 0; y < bs; ++y)
        for (int x = 0; x < bs; ++x)
          tile[size_t(y) * bs + x] =
              luma[size_t(ty * bs + y) * img.width + (tx * bs + x)];
      const auto spec = dft2d(tile, bs, bs);
      double sum = 0.0;
      for (int v = 0; v < bs; ++v) {
        for (int u = 0; u < bs; ++u) {
          const int fu = u <= bs / 2 ? u : u - bs;
          const int fv = v <= bs / 2 ? v : v - bs;
          if (std::hypot(double(fu), double(fv)) > cutoff)
            sum += std::norm(spec[size_t(v) * bs + u]);
        }
      }
      energy[size_t(ty) * tiles_x + tx] = sum;
    }
  }

  double lo = energy[0], hi = energy[0];
  for (double e : energy) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  gray_map out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const int ty = std::min(y / bs, tiles_y - 1);
    for (int x = 0; x < img.width; ++x) {
      const int tx = std::min(x / bs, tiles_x - 1);
      const double e = energy[size_t(ty) * tiles_x + tx];
      out.at(x, y) = hi == lo ? 0.f : float((e - lo) / (hi - lo));
    }
  }
  return out;
}

}  // namespace

std::string to_string(fft_mode m) {
  return m == fft_mode::global_spectrum ? "global_spectrum" : "high_freq_heatmap";
}

fft_mode fft_mode_from_string(const std::string& s) {
  if (s == "global_spectrum") return fft_mode::global_spectrum;
  if (s == "high_freq_heatmap") return fft_mode::high_freq_heatmap;
  fail(errc::invalid_param, "unknown fft mode \"" + s + "\"");
}

std::vector<std::complex<double>> dft2d(const std::vector<double>& in, int width,
                                        int height) {
  if (width <= 0 || height <= 0 || in.size() != size_t(width) * height)
    fail(errc::invalid_param, "dft2d input shape");
  const size_t n = in.size();
  fftw_complex* buf_in = fftw_alloc_complex(n);
  fftw_complex* buf_out = fftw_alloc_complex(n);
  for (size_t i = 0; i < n; ++i) {
    buf_in[i][0] = in[i];
    buf_in[i][1] = 0.0;
  }
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan = fftw_plan_dft_2d(height, width, buf_in, buf_out, FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  fftw_execute(plan);
  std::vector<std::complex<double>> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = {buf_out[i][0], buf_out[i][1]};
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(buf_in);
  fftw_free(buf_out);
  return out;
}

gray_map ela(const raster_image& img, const ela_config& cfg) {
  if (!(cfg.amplification > 0.0))
    fail(errc::invalid_param, "amplification must be positive");
  const raster_image rt = decode_jpeg(encode_jpeg(img, cfg.quality));
  if (rt.width != img.width || rt.height != img.height)
    fail(errc::encode_failure, "jpeg roundtrip changed dimensions");
  gray_map out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int d = 0;
      for (int c = 0; c < 3; ++c)
        d = std::max(d, std::abs(int(img.at(x, y, c)) - int(rt.at(x, y, c))));
      out.at(x, y) = float(std::min(1.0, cfg.amplification * d / 255.0));
    }
  }
  return out;
}

gray_map fft_map(const raster_image& img, const fft_config& cfg) {
  validate_fft_config(cfg);
  return cfg.mode == fft_mode::global_spectrum ? global_spectrum(img)
                                               : high_freq_heatmap(img, cfg);
}

gray_map noise_residual(const raster_image& img) {
  gray_map out(img.width, img.height);
  std::uint8_t window[9];
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int best = 0;
      for (int c = 0; c < 3; ++c) {
        int k = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = std::clamp(y + dy, 0, img.height - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = std::clamp(x + dx, 0, img.width - 1);
            window[k++] = img.at(xx, yy, c);
          }
        }
        const int med = median9(window);
        best = std::max(best, std::abs(int(img.at(x, y, c)) - med));
      }
      out.at(x, y) = float(best / 255.0);
    }
  }
  return out;
}

raster_image zoom_in(const raster_image& img, const bounding_box& bbox,
                     int min_side) {
  if (min_side < 1) fail(errc::invalid_param, "min_side must be positive");
  const bounding_box b = clamp_box(bbox, img.width, img.height);
  const int cw = b.x2 - b.x1, ch = b.y2 - b.y1;
  raster_image crop(cw, ch);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x)
      for (int c = 0; c < 3; ++c)
        crop.at(x, y, c) = img.at(b.x1 + x, b.y1 + y, c);

  const int shorter = std::min(cw, ch);
  if (shorter >= min_side) return crop;

  const auto scaled = [&](int side) {
    return int((std::int64_t(side) * min_side + shorter - 1) / shorter);
  };
  const int ow = cw == shorter ? min_side : scaled(cw);
  const int oh = ch == shorter ? min_side : scaled(ch);
  raster_image out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    const int sy = int(std::int64_t(y) * ch / oh);
    for (int x = 0; x < ow; ++x) {
      const int sx = int(std::int64_t(x) * cw / ow);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = crop.at(sx, sy, c);
    }
  }
  return out;
}

tool_output run_tool(tool_id tool, const raster_image& img, const tool_args& args) {
  tool_output out;
  out.tool = tool;
  switch (tool) {
    case tool_id::ela: {
      const ela_config cfg = args.ela.value_or(ela_config{});
      out.map = ela(img, cfg);
      out.params_echo = {{"tool", "ELA"},
                         {"quality", cfg.quality},
                         {"amplification", cfg.amplification}};
      break;
    }
    case tool_id::fft: {
      const fft_config cfg = args.fft.value_or(fft_config{});
      out.map = fft_map(img, cfg);
      out.params_echo = {{"tool", "FFT"},
                         {"mode", to_string(cfg.mode)},
                         {"block_size", cfg.block_size},
                         {"radial_cutoff", cfg.radial_cutoff}};
      break;
    }
    case tool_id::npp: {
      if (args.npp_map) {
        gray_map m = load_gray(*args.npp_map);
        if (m.width != img.width || m.height != img.height)
          fail(errc::shape_mismatch, "external map is " + std::to_string(m.width) +
                                         "x" + std::to_string(m.height) +
                                         ", image is " + std::to_string(img.width) +
                                         "x" + std::to_string(img.height));
        out.map = std::move(m);
        out.params_echo = {{"tool", "NPP"},
                           {"source", "external"},
                           {"map", args.npp_map->string()}};
      } else {
        out.map = noise_residual(img);
        out.params_echo = {{"tool", "NPP"}, {"source", "surrogate"}};
      }
      break;
    }
    case tool_id::zoom_in: {
      if (!args.bbox) fail(errc::bad_arguments, "zoom_in needs a bbox");
      const bounding_box used = clamp_box(*args.bbox, img.width, img.height);
      out.map = zoom_in(img, used, args.min_side);
      out.params_echo = {{"tool", "zoom_in"},
                         {"bbox", {used.x1, used.y1, used.x2, used.y2}},
                         {"min_side", args.min_side}};
      break;
    }
  }
  return out;
}

}  // namespace forgekit
