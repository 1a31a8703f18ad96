#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forgekit/core.hpp"

namespace forgekit {

struct ela_config {
  int quality = 90;
  double amplification = 10.0;
};

enum class fft_mode : std::uint8_t { global_spectrum, high_freq_heatmap };

std::string to_string(fft_mode m);
fft_mode fft_mode_from_string(const std::string& s);

struct fft_config {
  fft_mode mode = fft_mode::global_spectrum;
  int block_size = 32;         // power of two, >= 8
  double radial_cutoff = 0.25; // fraction of Nyquist
};

// Recompression residual: per-pixel channel-max |orig - jpeg(orig)|,
// amplified and clipped to [0,1].
gray_map ela(const raster_image& img, const ela_config& cfg = {});

// global_spectrum: log magnitude of the full-frame DFT, DC centered, min-max
// scaled. high_freq_heatmap: per-tile energy above radial_cutoff * Nyquist,
// min-max scaled over tiles, nearest-neighbor upsampled to the input size.
gray_map fft_map(const raster_image& img, const fft_config& cfg = {});

// Channel-max |img - median3x3(img)| / 255 with replicated edges.
gray_map noise_residual(const raster_image& img);

// Crop then nearest-neighbor upscale until the shorter side reaches min_side
// (aspect kept, sizes rounded up). Never downsamples.
raster_image zoom_in(const raster_image& img, const bounding_box& bbox,
                     int min_side = 224);

// Unnormalized forward 2D DFT of a row-major real field.
std::vector<std::complex<double>> dft2d(const std::vector<double>& in, int width,
                                        int height);

struct tool_args {
  std::optional<ela_config> ela;
  std::optional<fft_config> fft;
  std::optional<bounding_box> bbox;  // zoom_in only
  int min_side = 224;
  // NPP: grayscale map produced by an external model; must match the image
  // dimensions. Without it the residual surrogate runs.
  std::optional<std::filesystem::path> npp_map;
};

struct tool_output {
  tool_id tool = tool_id::ela;
  std::variant<gray_map, raster_image> map;  // zoom_in yields an image
  nlohmann::json params_echo;
};

tool_output run_tool(tool_id tool, const raster_image& img,
                     const tool_args& args = {});

}  // namespace forgekit
