#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "forgekit/core.hpp"

namespace forgekit {

// PNG or JPEG, decided by file content. Throws io_failure.
raster_image load_image(const std::filesystem::path& path);

void save_png(const raster_image& img, const std::filesystem::path& path);

// 8-bit grayscale, values quantized as round(v * 255).
void save_png(const gray_map& map, const std::filesystem::path& path);

// Grayscale PNG scaled to [0,1]; RGB inputs collapse through Rec.601 luma.
gray_map load_gray(const std::filesystem::path& path);

// In-memory JPEG; quality in [1,100]. Throws encode_failure.
std::vector<std::uint8_t> encode_jpeg(const raster_image& img, int quality);
raster_image decode_jpeg(const std::vector<std::uint8_t>& bytes);

}  // namespace forgekit
